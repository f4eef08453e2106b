#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "pilotstack/dataset.hpp"
#include "pilotstack/error.hpp"
#include "pilotstack/ppm.hpp"
#include "pilotstack/rng.hpp"
#include "temp_dir.hpp"

using namespace pilot;

namespace {

CameraFrame noise_frame(std::size_t w, std::size_t h, Rng& rng) {
  CameraFrame f(w, h);
  for (auto& p : f.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
  return f;
}

SessionManifest manifest(std::size_t w, std::size_t h) {
  SessionManifest m;
  m.image_width = w;
  m.image_height = h;
  return m;
}

struct Written {
  std::vector<CameraFrame> frames;
  std::vector<ControlInput> inputs;
};

Written write_session(const std::filesystem::path& dir, std::size_t n, std::uint64_t seed, std::size_t w = 8,
                      std::size_t h = 6) {
  Rng rng(seed);
  Written out;
  SessionWriter s(dir, manifest(w, h));
  for (std::size_t i = 0; i < n; ++i) {
    out.frames.push_back(noise_frame(w, h, rng));
    out.inputs.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));
    EXPECT_EQ(s.append(out.frames.back(), out.inputs.back(), static_cast<std::int64_t>(i * 50)), i);
  }
  s.close();
  return out;
}

void rewrite_lines(const std::filesystem::path& file, std::size_t keep) {
  std::ifstream in(file);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  std::ofstream out(file, std::ios::trunc);
  for (std::size_t i = 0; i < keep; ++i) out << lines[i] << '\n';
}

}  // namespace

TEST(Ppm, EncodeDecodeIdentity) {
  Rng rng(1);
  const CameraFrame f = noise_frame(7, 5, rng);
  const auto bytes = encode_ppm(f);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 11), "P6\n7 5\n255\n");
  EXPECT_EQ(decode_ppm(bytes), f);
}

TEST(Ppm, AcceptsCommentsAndRejectsGarbage) {
  std::string s = "P6\n# made by hand\n1 1\n255\n";
  s += std::string("\x01\x02\x03", 3);
  const std::vector<std::uint8_t> ok(s.begin(), s.end());
  EXPECT_EQ(decode_ppm(ok).at(0, 0), (Rgb{1, 2, 3}));

  auto bad = ok;
  bad[1] = '3';
  try {
    decode_ppm(bad, "img_000003.ppm");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("img_000003.ppm"), std::string::npos);
  }
  EXPECT_THROW(decode_ppm(std::vector<std::uint8_t>(ok.begin(), ok.end() - 1)), DataError);
  const std::string wide = "P6\n1 1\n65535\n123456";
  EXPECT_THROW(decode_ppm(std::vector<std::uint8_t>(wide.begin(), wide.end())), DataError);
}

TEST(Dataset, FirstAppendAndFileLayout) {
  TempDir tmp("ds");
  SessionWriter s(tmp / "s", manifest(4, 3));
  EXPECT_EQ(s.append(CameraFrame(4, 3), ControlInput(2.0, -0.5), 0), 0u);
  s.close();
  EXPECT_TRUE(std::filesystem::exists(tmp / "s/img_000000.ppm"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "s/manifest.json"));
  const auto recs = read_records(tmp / "s");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].steering, 1.0);
  EXPECT_EQ(recs[0].image_file, "img_000000.ppm");
  EXPECT_EQ(read_manifest(tmp / "s").record_count, 1u);
}

TEST(Dataset, RecordLineKeys) {
  TempDir tmp("ds");
  SessionWriter s(tmp / "s", manifest(2, 2));
  s.append(CameraFrame(2, 2), ControlInput(0.25, 0.5), 0);
  s.close();
  std::ifstream in(tmp / "s/records.jsonl");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, R"({"i":0,"image":"img_000000.ppm","steering":0.25,"throttle":0.5,"ts_ms":0})");
}

TEST(Dataset, WriterGuards) {
  TempDir tmp("ds");
  SessionWriter s(tmp / "s", manifest(4, 3));
  EXPECT_THROW(s.append(CameraFrame(3, 3), ControlInput(), 0), ValidationError);
  s.append(CameraFrame(4, 3), ControlInput(), 100);
  EXPECT_ANY_THROW(s.append(CameraFrame(4, 3), ControlInput(), 99));
  s.close();
  s.close();
  EXPECT_ANY_THROW(SessionWriter(tmp / "s", manifest(4, 3)));
  SessionWriter moved(std::move(s));
  EXPECT_FALSE(moved.is_open());
}

TEST(Dataset, FifteenHundredRecordRoundTrip) {
  TempDir tmp("ds");
  const auto written = write_session(tmp / "s", 1500, 42);
  const auto m = read_manifest(tmp / "s");
  EXPECT_EQ(m.record_count, 1500u);
  EXPECT_EQ(read_records(tmp / "s").back().timestamp_ms, 74950);
  const Dataset d = load_session(tmp / "s");
  ASSERT_EQ(d.size(), 1500u);
  EXPECT_EQ(d.session_ids, std::vector<std::string>{"s"});
  for (std::size_t i = 0; i < d.size(); ++i) {
    ASSERT_EQ(d.samples[i].image, written.frames[i]);
    ASSERT_EQ(d.samples[i].steering, written.inputs[i].steering());
    ASSERT_EQ(d.samples[i].throttle, written.inputs[i].throttle());
  }
}

TEST(Dataset, RoundTripProperty) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    TempDir tmp("ds");
    const std::size_t n = 1 + rng.below(30);
    const auto written = write_session(tmp / "s", n, rng.next(), 1 + rng.below(9), 1 + rng.below(9));
    const Dataset d = load_session(tmp / "s");
    ASSERT_EQ(d.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(d.samples[i].image, written.frames[i]);
      ASSERT_EQ(d.samples[i].steering, written.inputs[i].steering());
    }
  }
}

TEST(Dataset, CountMismatchIsRejected) {
  TempDir tmp("ds");
  write_session(tmp / "s", 10, 1);
  rewrite_lines(tmp / "s/records.jsonl", 9);
  EXPECT_THROW(load_session(tmp / "s"), DataError);
}

TEST(Dataset, CorruptImageNamesFile) {
  TempDir tmp("ds");
  write_session(tmp / "s", 5, 1);
  {
    std::fstream f(tmp / "s/img_000003.ppm", std::ios::in | std::ios::out | std::ios::binary);
    f.put('Q');
  }
  try {
    load_session(tmp / "s");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("img_000003.ppm"), std::string::npos) << e.what();
  }
}

TEST(Dataset, OutOfRangeLabelAndMissingFilesRejected) {
  TempDir tmp("ds");
  write_session(tmp / "s", 2, 1);
  {
    std::ofstream out(tmp / "s/records.jsonl", std::ios::trunc);
    out << R"({"i":0,"image":"img_000000.ppm","steering":1.5,"throttle":0,"ts_ms":0})" << '\n';
    out << R"({"i":1,"image":"img_000001.ppm","steering":0,"throttle":0,"ts_ms":50})" << '\n';
  }
  EXPECT_THROW(load_session(tmp / "s"), DataError);
  EXPECT_THROW(load_session(tmp / "missing"), DataError);
  std::filesystem::remove(tmp / "s/manifest.json");
  EXPECT_THROW(load_session(tmp / "s"), DataError);
}

TEST(Dataset, LoadSessionsConcatenatesInOrder) {
  TempDir tmp("ds");
  write_session(tmp / "a", 3, 1);
  write_session(tmp / "b", 4, 2);
  const Dataset d = load_sessions({tmp / "a", tmp / "b"});
  EXPECT_EQ(d.size(), 7u);
  EXPECT_EQ(d.samples[3].image, load_session(tmp / "b").samples[0].image);
  write_session(tmp / "c", 1, 3, 5, 5);
  EXPECT_THROW(load_sessions({tmp / "a", tmp / "c"}), DataError);
}

TEST(Split, CardinalityAndDisjointness) {
  const auto s = split_indices(10, 0.2, 7);
  EXPECT_EQ(s.val.size(), 2u);
  EXPECT_EQ(s.train.size(), 8u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(*all.rbegin(), 9u);
}

TEST(Split, DeterministicAndSeedSensitive) {
  EXPECT_EQ(split_indices(100, 0.2, 5).val, split_indices(100, 0.2, 5).val);
  EXPECT_EQ(split_indices(100, 0.2, 5).train, split_indices(100, 0.2, 5).train);
  const auto a = split_indices(100, 0.2, 1);
  const auto b = split_indices(100, 0.2, 2);
  EXPECT_NE(a.val, b.val);
}

TEST(Split, PartitionProperty) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng.below(300);
    const double frac = rng.uniform(0.01, 0.99);
    const auto s = split_indices(n, frac, rng.next());
    EXPECT_GE(s.train.size(), 1u);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.val.begin(), s.val.end());
    std::sort(all.begin(), all.end());
    for (std::size_t k = 0; k < n; ++k) ASSERT_EQ(all[k], k);
  }
  EXPECT_ANY_THROW(split_indices(0, 0.2, 1));
  EXPECT_ANY_THROW(split_indices(10, 0.0, 1));
  EXPECT_ANY_THROW(split_indices(10, 1.0, 1));
}

TEST(Batches, SizesAndCoverage) {
  Dataset d;
  d.samples.resize(130, Sample{CameraFrame(2, 2), 0.0, 0.0});
  const auto seq = iterate_batches(d, 64, 3, 0);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq.batch_indices(0).size(), 64u);
  EXPECT_EQ(seq.batch_indices(1).size(), 64u);
  EXPECT_EQ(seq.batch_indices(2).size(), 2u);
  std::set<std::size_t> seen;
  for (std::size_t k = 0; k < seq.size(); ++k)
    for (auto i : seq.batch_indices(k)) EXPECT_TRUE(seen.insert(i).second);
  EXPECT_EQ(seen.size(), 130u);
  EXPECT_NE(iterate_batches(d, 64, 3, 0).order(), iterate_batches(d, 64, 3, 1).order());
  EXPECT_EQ(iterate_batches(d, 64, 3, 1).order(), iterate_batches(d, 64, 3, 1).order());
}

TEST(Batches, TensorLayout) {
  Dataset d;
  CameraFrame f(2, 1, {10, 20, 30, 40, 50, 255});
  d.samples = {Sample{f, 0.5, -0.25}, Sample{CameraFrame(2, 1), -1.0, 1.0}};
  const Batch b = make_batch(d, {0, 1});
  EXPECT_EQ(b.images.shape(), (nn::Shape{2, 1, 2, 3}));
  EXPECT_EQ(b.images[5], 255.0f);
  EXPECT_EQ(b.labels.shape(), (nn::Shape{2, 2}));
  EXPECT_EQ(b.labels[0], 0.5f);
  EXPECT_EQ(b.labels[1], -0.25f);
  EXPECT_EQ(b.labels[3], 1.0f);
}
