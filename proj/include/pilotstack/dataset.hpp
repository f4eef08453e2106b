#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "pilotstack/camera.hpp"
#include "pilotstack/nn/tensor.hpp"
#include "pilotstack/vehicle.hpp"

namespace pilot {

inline constexpr int kSessionFormatVersion = 1;

/// One line of records.jsonl.
struct DriveRecord {
  std::string image_file;
  double steering = 0.0;
  double throttle = 0.0;
  std::int64_t timestamp_ms = 0;
  std::uint64_t index = 0;
};

/// manifest.json of a recording session.
struct SessionManifest {
  int format_version = kSessionFormatVersion;
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  double record_rate_hz = 20.0;
  std::string track_id = "default";
  std::string created_utc;  // filled with the current time when empty
  std::size_t record_count = 0;
};

std::string image_file_name(std::uint64_t index);
std::string utc_now_iso8601();

/// Append-only writer for one session directory:
/// manifest.json, records.jsonl and img_%06d.ppm files.
class SessionWriter {
 public:
  /// Creates `dir` (it must not already hold a session).
  SessionWriter(std::filesystem::path dir, SessionManifest manifest);
  SessionWriter(SessionWriter&& other) noexcept;
  SessionWriter& operator=(SessionWriter&& other) noexcept;
  ~SessionWriter();

  /// Writes the image and its label line; returns the record index.
  std::uint64_t append(const CameraFrame& frame, const ControlInput& input, std::int64_t timestamp_ms);
  /// Rewrites the manifest with the final record count. Idempotent.
  void close();

  bool is_open() const { return open_; }
  std::size_t record_count() const { return manifest_.record_count; }
  const std::filesystem::path& dir() const { return dir_; }
  const SessionManifest& manifest() const { return manifest_; }

 private:
  void write_manifest() const;

  std::filesystem::path dir_;
  SessionManifest manifest_;
  std::ofstream records_;
  std::int64_t last_timestamp_ms_ = 0;
  bool open_ = false;
};

std::uint64_t append_record(SessionWriter& session, const CameraFrame& frame, const ControlInput& input,
                            std::int64_t timestamp_ms);

struct Sample {
  CameraFrame image;
  double steering = 0.0;
  double throttle = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> session_ids;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t height() const { return samples.empty() ? 0 : samples.front().image.height(); }
  std::size_t width() const { return samples.empty() ? 0 : samples.front().image.width(); }
};

SessionManifest read_manifest(const std::filesystem::path& dir);
std::vector<DriveRecord> read_records(const std::filesystem::path& dir);

/// Loads and verifies a closed session: record count, label ranges, index
/// and timestamp ordering, image headers and dimensions. Throws DataError.
Dataset load_session(const std::filesystem::path& dir);
/// Concatenates several sessions in the given order; all must share one image size.
Dataset load_sessions(const std::vector<std::filesystem::path>& dirs);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded Fisher-Yates permutation (xoshiro256** seeded through SplitMix64);
/// the first ceil(n * val_fraction) indices go to validation. At least one
/// sample always stays in training.
SplitIndices split_indices(std::size_t n, double val_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, double val_fraction, std::uint64_t seed);

struct Batch {
  std::vector<std::size_t> indices;
  nn::Tensor images;  // (b, h, w, 3), raw byte values 0..255 as float
  nn::Tensor labels;  // (b, 2): steering, throttle
};

Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices);

/// Per-epoch shuffled mini-batches; the order is a pure function of
/// (dataset size, batch size, seed, epoch). The last batch may be short.
class BatchSequence {
 public:
  BatchSequence(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch);

  std::size_t size() const { return (order_.size() + batch_size_ - 1) / batch_size_; }
  const std::vector<std::size_t>& order() const { return order_; }
  std::vector<std::size_t> batch_indices(std::size_t k) const;
  Batch operator[](std::size_t k) const { return make_batch(*dataset_, batch_indices(k)); }

 private:
  const Dataset* dataset_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
};

BatchSequence iterate_batches(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                              std::uint64_t epoch);

}  // namespace pilot
