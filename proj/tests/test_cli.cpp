#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "rmvh/byte_io.hpp"
#include "rmvh/cli.hpp"
#include "rmvh/dataset.hpp"
#include "rmvh/eval.hpp"
#include "rmvh/model_io.hpp"

using namespace rmvh;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("rmvh_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes, std::size_t n) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

// Shared small pipeline: synth with held-out queries, then train.
struct Pipeline {
  fs::path dir, db, queries, model;
};

const std::vector<std::string> kSmall = {"--clusters", "4",   "--per-cluster", "60", "--dims",      "8,12",
                                         "--landmarks", "40", "--bits",        "16", "--base-size", "50"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

const Pipeline& pipeline() {
  static const Pipeline p = [] {
    Pipeline out;
    out.dir = scratch("pipeline");
    out.db = out.dir / "db.manifest";
    out.queries = out.dir / "q.manifest";
    out.model = out.dir / "m.rmvh";
    Run s = cli(with_small({"synth", "--out", out.db.string(), "--n-query", "40", "--query-out",
                            out.queries.string(), "--seed", "3"}));
    REQUIRE(s.code == 0);
    Run t = cli(with_small({"train", "--data", out.db.string(), "--model", out.model.string(), "--seed", "5"}));
    REQUIRE_MESSAGE(t.code == 0, t.err);
    return out;
  }();
  return p;
}

}  // namespace

TEST_CASE("synth writes loadable, reproducible files") {
  const fs::path dir = scratch("synth");
  Run a = cli({"synth", "--out", (dir / "a.manifest").string(), "--clusters", "10", "--per-cluster", "200",
               "--dims", "16,24", "--seed", "9"});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  Run b = cli({"synth", "--out", (dir / "b.manifest").string(), "--clusters", "10", "--per-cluster", "200",
               "--dims", "16,24", "--seed", "9"});
  REQUIRE(b.code == 0);
  const MultiViewDataset ds = load_dataset(dir / "a.manifest");
  CHECK(ds.num_samples() == 2000);
  CHECK(ds.num_views() == 2);
  const std::string manifest = slurp(dir / "a.manifest");
  Index views = 0;
  std::istringstream lines(manifest);
  for (std::string line; std::getline(lines, line);) views += line.rfind("view =", 0) == 0;
  CHECK(views == 2);
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("a", 0) == 0 && e.path().extension() != ".manifest") {
      fs::path twin = dir / ("b" + name.substr(1));
      REQUIRE(fs::exists(twin));
      CHECK(slurp(e.path()) == slurp(twin));
    }
  }
  CHECK(load_dataset(dir / "b.manifest").views == ds.views);

  Run bad = cli({"synth", "--out", "/proc/definitely/not/writable.manifest"});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("error") != std::string::npos);
}

TEST_CASE("default hyperparameters") {
  RunConfig cfg;
  CHECK(cfg.train.hp.gamma == 1e-4);
  CHECK(cfg.train.hp.delta == 1e-6);
  CHECK(cfg.train.hp.alpha == 0.1);
  CHECK(cfg.train.hp.beta == 1.0);
  CHECK(cfg.train.hp.lambda == 1e-3);
  CHECK(cfg.radius == 2);
  CHECK(cfg.top_k == 100);

  RunConfig l500;
  l500.preset = Preset::l500_k5;
  apply_preset(l500, false, false);
  CHECK(l500.train.graph.landmarks == 500);
  CHECK(l500.train.graph.k == 5);
  RunConfig l300;
  l300.preset = Preset::l300_k3;
  apply_preset(l300, false, false);
  CHECK(l300.train.graph.landmarks == 300);
  CHECK(l300.train.graph.k == 3);
  l500.train.graph.k = 2;
  apply_preset(l500, false, true);
  CHECK(l500.train.graph.k == 2);

  const Pipeline& p = pipeline();
  Run info = cli({"inspect", "--model", p.model.string()});
  REQUIRE(info.code == 0);
  CHECK(info.out.find("format_version 1") != std::string::npos);
  CHECK(info.out.find("bits 16") != std::string::npos);
  CHECK(info.out.find("gamma = 0.0001") != std::string::npos);
  CHECK(info.out.find("delta = 9.9999999999999995e-07") != std::string::npos);
  CHECK(info.out.find("alpha = 0.10000000000000001") != std::string::npos);
  CHECK(info.out.find("beta = 1\n") != std::string::npos);
  CHECK(info.out.find("lambda = 0.001") != std::string::npos);
}

TEST_CASE("train writes traces and the model round-trips") {
  const Pipeline& p = pipeline();
  for (const char* suffix : {".alm_trace.csv", ".objective_trace.csv", ".train_codes.txt"})
    CHECK(fs::exists(p.dir / (std::string("m") + suffix)));
  CHECK(slurp(p.dir / "m.objective_trace.csv").rfind("iteration,objective,seconds,cg_iterations", 0) == 0);

  const ModelFile file = load_model(p.model);
  CHECK(file.model.bits() == 16);
  CHECK(serialize_model(file) == io::read_file(p.model));
  const ModelFile again = deserialize_model(serialize_model(file));
  CHECK(again.model.w == file.model.w);
  CHECK(again.model.b == file.model.b);
  CHECK(again.model.landmarks.views == file.model.landmarks.views);
  CHECK(again.model.kernel.sigma == file.model.kernel.sigma);
  CHECK(again.model.base->centers == file.model.base->centers);
  CHECK(again.model.base->embeddings == file.model.base->embeddings);
  CHECK(again.config_snapshot == file.config_snapshot);

  const MultiViewDataset q = load_dataset(p.queries);
  const fs::path codes = p.dir / "q.codes";
  Run enc = cli({"encode", "--model", p.model.string(), "--data", p.queries.string(), "--out", codes.string()});
  REQUIRE(enc.code == 0);
  CHECK(CodeMatrix::from_text(slurp(codes)) == encode_dataset(file.model, q, EncoderPath::kernel));
  Run proto = cli({"encode", "--model", p.model.string(), "--data", p.queries.string(), "--out", codes.string(),
                   "--encoder", "prototype"});
  REQUIRE(proto.code == 0);
  CHECK(CodeMatrix::from_text(slurp(codes)) == prototype_encode_all(q, *file.model.base));

  // Training is deterministic.
  const fs::path other = p.dir / "m2.rmvh";
  REQUIRE(cli(with_small({"train", "--data", p.db.string(), "--model", other.string(), "--seed", "5"})).code == 0);
  const ModelFile twin = load_model(other);
  CHECK(twin.model.w == file.model.w);
  CHECK(twin.model.b == file.model.b);
}

TEST_CASE("corrupt and damaged model files") {
  const Pipeline& p = pipeline();
  const auto bytes = io::read_file(p.model);

  const fs::path cut = p.dir / "cut.rmvh";
  io::write_file(cut, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + bytes.size() / 2));
  CHECK_THROWS_AS(load_model(cut), CorruptFile);
  Run r = cli({"inspect", "--model", cut.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("error") != std::string::npos);

  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(deserialize_model(flipped), CorruptFile);

  // Newer version with a valid checksum.
  auto newer = bytes;
  newer[8] = 7;
  const std::uint64_t h = fnv1a(newer, newer.size() - 8);
  for (int i = 0; i < 8; ++i) newer[newer.size() - 8 + i] = static_cast<std::uint8_t>(h >> (8 * i));
  try {
    deserialize_model(newer);
    FAIL("expected a version error");
  } catch (const VersionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('7') != std::string::npos);
    CHECK(msg.find('1') != std::string::npos);
  }
  const fs::path future = p.dir / "future.rmvh";
  io::write_file(future, newer);
  Run v = cli({"inspect", "--model", future.string()});
  CHECK(v.code != 0);
}

TEST_CASE("eval: defaults, reports and the random baseline") {
  const Pipeline& p = pipeline();
  Run e = cli({"eval", "--model", p.model.string(), "--db", p.db.string(), "--data", p.queries.string()});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  CHECK(e.out.find("map@100") != std::string::npos);
  CHECK(e.out.find("lookup_precision@r2") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(p.dir / "m.report.json"));
  CHECK(report["top_k"].get<int>() == 100);
  CHECK(report["radius"].get<int>() == 2);
  const double map = report["map"].get<double>();
  CHECK(slurp(p.dir / "m.pr.csv").rfind("radius,recall,precision\n", 0) == 0);

  // Random-code baseline on the same query/database split.
  const MultiViewDataset db = load_dataset(p.db), q = load_dataset(p.queries);
  const Relevance rel = Relevance::single_label(*q.labels, *db.labels);
  std::mt19937_64 rng(77);
  double baseline = 0.0;
  for (int t = 0; t < 5; ++t) {
    CodeMatrix rq(q.num_samples(), 16), rd(db.num_samples(), 16);
    for (Index i = 0; i < rq.size(); ++i)
      for (Index b = 0; b < 16; ++b) rq.set(i, b, (rng() & 1) ? 1 : -1);
    for (Index i = 0; i < rd.size(); ++i)
      for (Index b = 0; b < 16; ++b) rd.set(i, b, (rng() & 1) ? 1 : -1);
    baseline += mean_average_precision(rq, rd, rel, 100) / 5;
  }
  MESSAGE("map " << map << " vs random " << baseline);
  CHECK(map > baseline);

  Run query = cli({"query", "--model", p.model.string(), "--db", p.db.string(), "--data", p.queries.string(),
                   "--out", (p.dir / "ranks.csv").string(), "--top-k", "5"});
  REQUIRE(query.code == 0);
  const std::string ranks = slurp(p.dir / "ranks.csv");
  CHECK(ranks.rfind("query,rank,item,distance,in_radius\n", 0) == 0);
  CHECK(std::count(ranks.begin(), ranks.end(), '\n') == 1 + 40 * 5);
}

TEST_CASE("dimension mismatch names the expected dims") {
  const Pipeline& p = pipeline();
  const fs::path other = p.dir / "wide.manifest";
  REQUIRE(cli({"synth", "--out", other.string(), "--clusters", "2", "--per-cluster", "10", "--dims", "8,13"}).code ==
          0);
  Run r = cli({"encode", "--model", p.model.string(), "--data", other.string(), "--out",
               (p.dir / "x.codes").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("[8, 12]") != std::string::npos);
  CHECK(r.err.find("[8, 13]") != std::string::npos);
}

TEST_CASE("config file values, flag precedence and validation") {
  const fs::path dir = scratch("config");
  {
    std::ofstream f(dir / "run.cfg");
    f << "clusters = 3\nper-cluster = 7\ndims = 4,5\nseed = 11\n";
  }
  Run a = cli({"synth", "--config", (dir / "run.cfg").string(), "--out", (dir / "a.manifest").string(),
               "--per-cluster", "9"});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const MultiViewDataset ds = load_dataset(dir / "a.manifest");
  CHECK(ds.num_samples() == 27);
  CHECK(ds.dims() == std::vector<Index>{4, 5});

  {
    std::ofstream f(dir / "bad.cfg");
    f << "no-such-key = 1\n";
  }
  CHECK(cli({"synth", "--config", (dir / "bad.cfg").string(), "--out", (dir / "b.manifest").string()}).code != 0);

  Run neg = cli({"synth", "--out", (dir / "c.manifest").string(), "--fraction", "1.5"});
  CHECK(neg.code != 0);
  CHECK(neg.err.find("config field 'fraction'") != std::string::npos);
  Run bits = cli({"train", "--data", "x", "--model", "y", "--bits", "0"});
  CHECK(bits.code != 0);
  CHECK(bits.err.find("config field 'bits'") != std::string::npos);
  CHECK(cli({"train", "--query-mode", "sideways"}).code != 0);
  CHECK(cli({}).code != 0);
  CHECK(cli({"--help"}).code == 0);

  // The training snapshot reloads as a config file.
  const Pipeline& p = pipeline();
  const ModelFile file = load_model(p.model);
  {
    std::ofstream f(dir / "snap.cfg");
    f << file.config_snapshot;
  }
  const fs::path re = dir / "re.rmvh";
  Run t = cli({"train", "--config", (dir / "snap.cfg").string(), "--model", re.string()});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  const ModelFile back = load_model(re);
  CHECK(back.model.w == file.model.w);
  CHECK(back.model.b == file.model.b);

  // So does the full inspect output.
  Run info = cli({"inspect", "--model", p.model.string()});
  REQUIRE(info.code == 0);
  {
    std::ofstream f(dir / "inspect.cfg");
    f << info.out;
  }
  const fs::path re2 = dir / "re2.rmvh";
  Run t2 = cli({"train", "--config", (dir / "inspect.cfg").string(), "--model", re2.string()});
  REQUIRE_MESSAGE(t2.code == 0, t2.err);
  CHECK(load_model(re2).model.w == file.model.w);
}
