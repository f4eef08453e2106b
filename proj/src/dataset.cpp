#include "pilotstack/dataset.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pilotstack/error.hpp"
#include "pilotstack/ppm.hpp"
#include "pilotstack/rng.hpp"

namespace pilot {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string image_file_name(std::uint64_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "img_%06llu.ppm", static_cast<unsigned long long>(index));
  return name;
}

std::string utc_now_iso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SessionWriter::SessionWriter(fs::path dir, SessionManifest manifest)
    : dir_(std::move(dir)), manifest_(std::move(manifest)) {
  if (manifest_.image_width == 0 || manifest_.image_height == 0) {
    throw ValidationError("session manifest needs image dimensions");
  }
  if (!(manifest_.record_rate_hz > 0.0)) throw ValidationError("session record_rate_hz must be > 0");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw DataError("cannot create session directory " + dir_.string() + ": " + ec.message());
  if (fs::exists(dir_ / "records.jsonl") || fs::exists(dir_ / "manifest.json")) {
    throw DataError("session directory " + dir_.string() + " already holds a session");
  }
  if (manifest_.created_utc.empty()) manifest_.created_utc = utc_now_iso8601();
  manifest_.format_version = kSessionFormatVersion;
  manifest_.record_count = 0;
  records_.open(dir_ / "records.jsonl", std::ios::out | std::ios::trunc);
  if (!records_) throw DataError("cannot create " + (dir_ / "records.jsonl").string());
  write_manifest();
  open_ = true;
}

SessionWriter::SessionWriter(SessionWriter&& other) noexcept
    : dir_(std::move(other.dir_)),
      manifest_(std::move(other.manifest_)),
      records_(std::move(other.records_)),
      last_timestamp_ms_(other.last_timestamp_ms_),
      open_(std::exchange(other.open_, false)) {}

SessionWriter& SessionWriter::operator=(SessionWriter&& other) noexcept {
  if (this != &other) {
    if (open_) {
      try {
        close();
      } catch (...) {
      }
    }
    dir_ = std::move(other.dir_);
    manifest_ = std::move(other.manifest_);
    records_ = std::move(other.records_);
    last_timestamp_ms_ = other.last_timestamp_ms_;
    open_ = std::exchange(other.open_, false);
  }
  return *this;
}

SessionWriter::~SessionWriter() {
  if (!open_) return;
  try {
    close();
  } catch (...) {
  }
}

void SessionWriter::write_manifest() const {
  const ordered_json j = {{"format_version", manifest_.format_version},
                          {"image_width", manifest_.image_width},
                          {"image_height", manifest_.image_height},
                          {"record_rate_hz", manifest_.record_rate_hz},
                          {"track_id", manifest_.track_id},
                          {"created_utc", manifest_.created_utc},
                          {"record_count", manifest_.record_count}};
  const fs::path tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write manifest in " + dir_.string());
  }
  fs::rename(tmp, dir_ / "manifest.json");
}

std::uint64_t SessionWriter::append(const CameraFrame& frame, const ControlInput& input, std::int64_t timestamp_ms) {
  if (!open_) throw DataError("session " + dir_.string() + " is closed");
  if (frame.width() != manifest_.image_width || frame.height() != manifest_.image_height) {
    throw ValidationError("frame is " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                          " but the session records " + std::to_string(manifest_.image_width) + "x" +
                          std::to_string(manifest_.image_height));
  }
  const std::uint64_t index = manifest_.record_count;
  if (index > 0 && timestamp_ms < last_timestamp_ms_) {
    throw ValidationError("record timestamps must be non-decreasing");
  }
  const std::string name = image_file_name(index);
  write_ppm(dir_ / name, frame);
  const ordered_json line = {{"i", index},
                             {"image", name},
                             {"steering", input.steering()},
                             {"throttle", input.throttle()},
                             {"ts_ms", timestamp_ms}};
  records_ << line.dump() << '\n';
  records_.flush();
  if (!records_) throw DataError("failed appending to " + (dir_ / "records.jsonl").string());
  last_timestamp_ms_ = timestamp_ms;
  ++manifest_.record_count;
  return index;
}

void SessionWriter::close() {
  if (!open_) return;
  open_ = false;
  records_.close();
  write_manifest();
}

std::uint64_t append_record(SessionWriter& session, const CameraFrame& frame, const ControlInput& input,
                            std::int64_t timestamp_ms) {
  return session.append(frame, input, timestamp_ms);
}

SessionManifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("missing manifest.json in " + dir.string());
  try {
    const auto j = nlohmann::json::parse(in);
    SessionManifest m;
    m.format_version = j.at("format_version").get<int>();
    m.image_width = j.at("image_width").get<std::size_t>();
    m.image_height = j.at("image_height").get<std::size_t>();
    m.record_rate_hz = j.at("record_rate_hz").get<double>();
    m.track_id = j.at("track_id").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    m.record_count = j.at("record_count").get<std::size_t>();
    if (m.format_version != kSessionFormatVersion) {
      throw DataError("unsupported session format_version " + std::to_string(m.format_version));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest.json in " + dir.string() + ": " + e.what());
  }
}

std::vector<DriveRecord> read_records(const fs::path& dir) {
  std::ifstream in(dir / "records.jsonl");
  if (!in) throw DataError("missing records.jsonl in " + dir.string());
  std::vector<DriveRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DriveRecord r;
      r.index = j.at("i").get<std::uint64_t>();
      r.image_file = j.at("image").get<std::string>();
      r.steering = j.at("steering").get<double>();
      r.throttle = j.at("throttle").get<double>();
      r.timestamp_ms = j.at("ts_ms").get<std::int64_t>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed record on line " + std::to_string(line_no) + " of " +
                      (dir / "records.jsonl").string() + ": " + e.what());
    }
  }
  return records;
}

Dataset load_session(const fs::path& dir) {
  const SessionManifest manifest = read_manifest(dir);
  const std::vector<DriveRecord> records = read_records(dir);
  if (records.size() != manifest.record_count) {
    throw DataError("manifest in " + dir.string() + " says " + std::to_string(manifest.record_count) +
                    " records but records.jsonl has " + std::to_string(records.size()));
  }
  Dataset ds;
  ds.session_ids.push_back(fs::absolute(dir).lexically_normal().filename().string());
  ds.samples.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    const DriveRecord& r = records[k];
    auto in_range = [](double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; };
    if (!in_range(r.steering) || !in_range(r.throttle)) {
      throw DataError("record " + std::to_string(r.index) + " in " + dir.string() + " has a label outside [-1, 1]");
    }
    if (k > 0 && r.index <= records[k - 1].index) {
      throw DataError("record indices are not strictly increasing in " + dir.string());
    }
    if (k > 0 && r.timestamp_ms < records[k - 1].timestamp_ms) {
      throw DataError("record timestamps decrease in " + dir.string());
    }
    if (r.image_file.find('/') != std::string::npos || r.image_file.find("..") != std::string::npos) {
      throw DataError("record image path escapes the session: " + r.image_file);
    }
    CameraFrame image = read_ppm(dir / r.image_file);
    if (image.width() != manifest.image_width || image.height() != manifest.image_height) {
      throw DataError("image " + r.image_file + " does not match the manifest dimensions");
    }
    ds.samples.push_back({std::move(image), r.steering, r.throttle});
  }
  return ds;
}

Dataset load_sessions(const std::vector<fs::path>& dirs) {
  Dataset all;
  for (const auto& dir : dirs) {
    Dataset ds = load_session(dir);
    if (!all.empty() && !ds.empty() && (ds.width() != all.width() || ds.height() != all.height())) {
      throw DataError("session " + dir.string() + " has a different image size");
    }
    all.session_ids.insert(all.session_ids.end(), ds.session_ids.begin(), ds.session_ids.end());
    for (auto& s : ds.samples) all.samples.push_back(std::move(s));
  }
  return all;
}

SplitIndices split_indices(std::size_t n, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("val_fraction must be in (0, 1)");
  if (n == 0) throw ValidationError("cannot split an empty dataset");
  const auto order = seeded_permutation(n, seed);
  auto n_val = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * val_fraction));
  n_val = std::min(n_val, n - 1);
  SplitIndices s;
  s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return s;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, double val_fraction, std::uint64_t seed) {
  if (dataset.empty()) throw ValidationError("cannot split an empty dataset");
  const SplitIndices idx = split_indices(dataset.size(), val_fraction, seed);
  std::pair<Dataset, Dataset> out;
  out.first.session_ids = out.second.session_ids = dataset.session_ids;
  for (auto i : idx.train) out.first.samples.push_back(dataset.samples[i]);
  for (auto i : idx.val) out.second.samples.push_back(dataset.samples[i]);
  return out;
}

Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  const std::size_t h = dataset.height();
  const std::size_t w = dataset.width();
  const std::size_t px = h * w * 3;
  Batch b{indices, nn::Tensor({indices.size(), h, w, 3}), nn::Tensor({indices.size(), 2})};
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Sample& s = dataset.samples.at(indices[k]);
    const auto& bytes = s.image.pixels();
    float* dst = b.images.data() + k * px;
    for (std::size_t i = 0; i < px; ++i) dst[i] = static_cast<float>(bytes[i]);
    b.labels[2 * k] = static_cast<float>(s.steering);
    b.labels[2 * k + 1] = static_cast<float>(s.throttle);
  }
  return b;
}

BatchSequence::BatchSequence(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch)
    : dataset_(&dataset), batch_size_(batch_size) {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  order_ = seeded_permutation(dataset.size(), derive_seed(seed, epoch + 1));
}

std::vector<std::size_t> BatchSequence::batch_indices(std::size_t k) const {
  const std::size_t begin = k * batch_size_;
  const std::size_t end = std::min(order_.size(), begin + batch_size_);
  if (begin >= end) throw std::out_of_range("batch index out of range");
  return {order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(end)};
}

BatchSequence iterate_batches(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch) {
  return BatchSequence(dataset, batch_size, seed, epoch);
}

}  // namespace pilot
