#include <cmath>

#include <gtest/gtest.h>

#include "dsiqa/error.hpp"
#include "dsiqa/pipeline.hpp"
#include "dsiqa/text.hpp"
#include "support/dataset_fixture.hpp"
#include "support/votes_fixture.hpp"

using namespace dsiqa;
using fixture::TempDir;
namespace fs = std::filesystem;

TEST(MetricList, ParsesAndRejects) {
  EXPECT_EQ(parse_metric_list("psnr, dsi"), (std::vector<std::string>{"psnr", "dsi"}));
  try {
    parse_metric_list("psnr,fsim");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("fsim"), std::string::npos);
    for (auto n : kMetricNames) EXPECT_NE(msg.find(n), std::string::npos) << n;
  }
  EXPECT_THROW(parse_metric_list("dsi,dsi"), Error);
  EXPECT_THROW(parse_metric_list(""), Error);
}

TEST(Metrics, TableCoversEveryDistortedImage) {
  TempDir dir;
  const auto m = fixture::build_small_dataset(dir.path(), 2);
  const auto t = compute_metrics(m, {});
  EXPECT_EQ(t.metric_names, (std::vector<std::string>{"psnr", "wpsnr", "ssim", "msddm", "dsi"}));
  ASSERT_EQ(t.keys.size(), 8u);
  EXPECT_EQ(t.keys[0], (ImageKey{"ref00", 1.6}));
  EXPECT_EQ(t.keys[7], (ImageKey{"ref01", 2.8}));
  for (const auto& row : t.values) {
    ASSERT_EQ(row.size(), 5u);
    EXPECT_TRUE(std::isfinite(row[0]));
    EXPECT_LE(row[3], row[4]);
    EXPECT_LE(row[4], 0.0);
  }
  // Direct recomputation for one row.
  const auto& e = m.entries[1];
  const auto ref = load_image(m.resolve(e.ref_path));
  const auto dist = load_image(m.resolve(e.distorted[2].path));
  EXPECT_EQ(t.values[6][0], psnr(ref, dist).value);
  EXPECT_EQ(t.values[6][4], dsi(ref, dist).value);
}

TEST(Metrics, IdenticalRowGivesIdentityPattern) {
  TempDir dir;
  fixture::build_small_dataset(dir.path(), 1);
  const auto mpath = dir / "data" / "manifest.json";
  auto text = fixture::read_bytes(mpath);
  const std::string from = "\"lambda-2.0/ref00.png\"";
  text.replace(text.find(from), from.size(), "\"reference/ref00.png\"");
  fixture::write_bytes(mpath, text);
  write_metrics_csv(compute_metrics(read_manifest(mpath), {}), dir / "m.csv");
  const auto csv = fixture::read_bytes(dir / "m.csv");
  EXPECT_NE(csv.find("ref00,2.0,inf,inf,1,0,0\n"), std::string::npos) << csv;
}

TEST(Metrics, JobCountDoesNotChangeOutput) {
  TempDir dir;
  const auto m = fixture::build_small_dataset(dir.path(), 3);
  MetricOptions one;
  MetricOptions many;
  many.jobs = 4;
  write_metrics_csv(compute_metrics(m, one), dir / "a.csv");
  write_metrics_csv(compute_metrics(m, many), dir / "b.csv");
  EXPECT_EQ(fixture::read_bytes(dir / "a.csv"), fixture::read_bytes(dir / "b.csv"));
}

TEST(Metrics, CsvRoundtrip) {
  TempDir dir;
  MetricTable t;
  t.metric_names = {"psnr", "dsi"};
  t.keys = {{"a", 1.6}, {"b", 2.25}};
  t.values = {{std::numeric_limits<double>::infinity(), -0.1}, {31.25, -2.5e-7}};
  write_metrics_csv(t, dir / "m.csv");
  EXPECT_EQ(fixture::read_bytes(dir / "m.csv"), "image_id,lambda,psnr,dsi\na,1.6,inf,-0.1\nb,2.25,31.25,-2.5e-07\n");
  const auto back = read_metrics_csv(dir / "m.csv");
  EXPECT_EQ(back.metric_names, t.metric_names);
  EXPECT_EQ(back.keys, t.keys);
  EXPECT_EQ(back.values, t.values);
  fixture::write_bytes(dir / "bad.csv", "image_id,lambda,psnr\na,1.6,abc\n");
  EXPECT_THROW(read_metrics_csv(dir / "bad.csv"), Error);
}

TEST(Degrade, ZeroVarianceReproducesInputs) {
  TempDir dir;
  fixture::write_references(dir / "in", 3);
  EXPECT_EQ(degrade_directory(dir / "in", dir / "out", {0.0, 4, true}, 2), 3u);
  for (const auto& f : fixture::list_files(dir / "in")) {
    EXPECT_EQ(load_image(dir / "out" / f), load_image(dir / "in" / f)) << f;
  }
}

TEST(Degrade, SeededPerFile) {
  TempDir dir;
  fixture::write_references(dir / "in", 2);
  degrade_directory(dir / "in", dir / "a", {200.0, 4, true}, 1);
  degrade_directory(dir / "in", dir / "b", {200.0, 4, true}, 2);
  for (const auto& f : fixture::list_files(dir / "a")) {
    EXPECT_EQ(fixture::read_bytes(dir / "a" / f), fixture::read_bytes(dir / "b" / f));
  }
  const auto ref = load_image(dir / "in" / "ref00.png");
  NoiseSpec spec{200.0, derive_seed(4, "ref00"), true};
  EXPECT_EQ(load_image(dir / "a" / "ref00.png"), quantize(add_awgn(ref, spec)));
}

TEST(Degrade, MissingDirectory) {
  TempDir dir;
  try {
    degrade_directory(dir / "nope", dir / "out", {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
  }
}

TEST(Subsets, LabelsFileOverridesManifest) {
  TempDir dir;
  fixture::write_references(dir / "refs", 2);
  write_text_file(dir / "labels.txt", "ref00,regular\nref01,noise_like\n");
  BuildOptions o;
  o.ref_dir = dir / "refs";
  o.out_dir = dir / "data";
  o.labels_path = dir / "labels.txt";
  build_dataset(o);
  write_text_file(dir / "override.txt", "ref01,low_contrast\n");
  const auto s = collect_subsets(dir / "override.txt", dir / "data" / "manifest.json");
  EXPECT_EQ(s.at("ref00"), Subset::Regular);
  EXPECT_EQ(s.at("ref01"), Subset::LowContrast);
  EXPECT_EQ(collect_subsets(std::nullopt, std::nullopt).size(), 0u);
}

TEST(Calibrate, ManifestSweep) {
  TempDir dir;
  const auto m = fixture::build_small_dataset(dir.path(), 2);
  std::map<ImageKey, double> mos;
  for (const auto& e : m.entries)
    for (const auto& d : e.distorted) mos[{e.id, d.lambda}] = 2.0;
  try {
    calibrate_manifest(m, mos, {}, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Undefined);
  }
  // MOS equal to DSI at c = 3 is maximized at some grid point with SROCC 1.
  const auto t = compute_metrics(m, {{"dsi"}, {3.0, {}}, 6.0, 1});
  for (std::size_t r = 0; r < t.keys.size(); ++r) mos[t.keys[r]] = t.values[r][0];
  const auto res = calibrate_manifest(m, mos, {1.0, 5.0, 1.0}, {}, 2);
  EXPECT_EQ(res.best_srocc, 1.0);
  EXPECT_EQ(res.sweep.size(), 5u);
  mos.erase(mos.begin());
  EXPECT_THROW(calibrate_manifest(m, mos, {}, {}, 1), Error);
}

TEST(Grid, Parse) {
  const auto g = parse_grid("1:10:0.1");
  EXPECT_EQ(g.lo, 1.0);
  EXPECT_EQ(g.hi, 10.0);
  EXPECT_EQ(g.step, 0.1);
  EXPECT_THROW(parse_grid("1:10"), Error);
  EXPECT_THROW(parse_grid("a:b:c"), Error);
  EXPECT_THROW(parse_grid("5:1:0.1"), Error);
}

TEST(Mos, FromVoteFile) {
  TempDir dir;
  const auto m = fixture::synthetic_manifest(2);
  std::string log;
  for (const char* o : {"a", "b", "c"}) {
    for (const auto& v : fixture::full_round_robin(m, o, 9, fixture::prefer_lower())) log += vote_to_json(v) + "\n";
  }
  fixture::write_bytes(dir / "votes.jsonl", log);
  const auto mos = compute_mos(dir / "votes.jsonl", m);
  EXPECT_EQ(mos.entries.size(), 8u);
  EXPECT_EQ(mos.entries.at({"r0", 1.6}).mos, 3.0);
  fixture::write_bytes(dir / "bad.jsonl", log + "{broken\n");
  try {
    compute_mos(dir / "bad.jsonl", m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":37"), std::string::npos) << e.what();
  }
}
