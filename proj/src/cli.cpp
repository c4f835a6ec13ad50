#include "rmvh/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <utility>

#include "CLI11.hpp"
#include "rmvh/eval.hpp"
#include "rmvh/model_io.hpp"

namespace rmvh {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  auto field = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw InvalidArgument("config field '" + key + "': " + what);
  };
  const auto& hp = train.hp;
  field(hp.gamma >= 0.0, "gamma", "must be >= 0");
  field(hp.delta >= 0.0, "delta", "must be >= 0");
  field(hp.alpha >= 0.0, "alpha", "must be >= 0");
  field(hp.beta >= 0.0, "beta", "must be >= 0");
  field(hp.lambda >= 0.0, "lambda", "must be >= 0");
  field(hp.beta > 0.0 || hp.gamma > 0.0, "beta", "beta and gamma cannot both be 0");
  field(hp.bits >= 1 && hp.bits <= 4096, "bits", "must be in [1, 4096]");
  field(hp.outer_iters >= 1, "outer-iters", "must be >= 1");
  field(hp.objective_tol >= 0.0, "objective-tol", "must be >= 0");
  field(hp.cg_tol > 0.0, "cg-tol", "must be > 0");
  field(hp.cg_max_iters >= 1, "cg-max-iters", "must be >= 1");
  field(train.graph.landmarks >= 1, "landmarks", "must be >= 1");
  field(train.graph.k >= 1 && train.graph.k <= train.graph.landmarks, "graph-k", "must be in [1, landmarks]");
  field(!train.graph.bandwidth || *train.graph.bandwidth > 0.0, "graph-bandwidth", "must be > 0");
  field(train.kernel.landmarks >= 0, "kernel-landmarks", "must be >= 0 (0 means equal to landmarks)");
  field(train.kernel.self_tuning_k >= 1, "self-tuning-k", "must be >= 1");
  field(train.base.size >= 1, "base-size", "must be >= 1");
  field(train.base.neighbors >= 1, "oos-k", "must be >= 1");
  field(train.alm.rho > 1.0, "alm-rho", "must be > 1");
  field(train.alm.mu_max > 0.0, "alm-mu-max", "must be > 0");
  field(train.alm.tol > 0.0, "alm-tol", "must be > 0");
  field(train.alm.max_iters >= 1, "alm-max-iters", "must be >= 1");
  field(train.alm_refresh_every >= 0, "alm-refresh-every", "must be >= 0");
  field(clusters >= 1, "clusters", "must be >= 1");
  field(per_cluster >= 1, "per-cluster", "must be >= 1");
  field(!dims.empty() && std::all_of(dims.begin(), dims.end(), [](Index d) { return d >= 1; }), "dims",
        "needs at least one view, every view at least one dimension");
  field(view_noise >= 0.0, "view-noise", "must be >= 0");
  field(n_query >= 0 && n_query < clusters * per_cluster, "n-query", "must be in [0, N)");
  field(fraction >= 0.0 && fraction <= 1.0, "fraction", "must lie in [0, 1]");
  field(top_k >= 1, "top-k", "must be >= 1");
  field(radius >= 0, "radius", "must be >= 0");
}

void apply_preset(RunConfig& cfg, bool explicit_landmarks, bool explicit_k) {
  if (cfg.preset == Preset::none) return;
  const bool small = cfg.preset == Preset::l300_k3;
  if (!explicit_landmarks) cfg.train.graph.landmarks = small ? 300 : 500;
  if (!explicit_k) cfg.train.graph.k = small ? 3 : 5;
}

namespace {

std::string dims_text(const std::vector<Index>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? ", " : "") + std::to_string(dims[i]);
  return s + "]";
}

std::vector<Index> model_dims(const HashModel& model) {
  std::vector<Index> d;
  for (const auto& v : model.landmarks.views) d.push_back(v.rows());
  return d;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw IoError("cannot write " + path.string());
}

template <class Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_text(path, s.str());
}

Relevance relevance_for(const MultiViewDataset& queries, const MultiViewDataset& db) {
  if (!queries.labels) throw InvalidArgument("query dataset '" + queries.name + "' has no labels");
  if (!db.labels) throw InvalidArgument("database dataset '" + db.name + "' has no labels");
  return Relevance::single_label(*queries.labels, *db.labels);
}

std::string require_path(const std::string& value, const std::string& key) {
  if (value.empty()) throw InvalidArgument("config field '" + key + "': a path is required for this command");
  return value;
}

// Output prefix for a command: --out when given, else `fallback` minus its extension.
fs::path output_prefix(const RunConfig& cfg, const std::string& fallback) {
  if (!cfg.out.empty()) return cfg.out;
  fs::path p = fallback;
  return p.replace_extension();
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
  return fs::path(prefix.string() + suffix);
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const std::string target = require_path(cfg.out, "out");
  MultiViewDataset ds = synth_multiview(cfg.clusters, cfg.per_cluster, cfg.dims, cfg.view_noise, cfg.train.seed);
  std::vector<fs::path> written;
  if (cfg.n_query > 0) {
    const std::string query_target = require_path(cfg.query_out, "query-out");
    Split s = split(ds, cfg.n_query, cfg.train.seed);
    s.train.name = ds.name + "-db";
    s.query.name = ds.name + "-query";
    written = save_dataset(s.train, target, cfg.gzip);
    auto q = save_dataset(s.query, query_target, cfg.gzip);
    written.insert(written.end(), q.begin(), q.end());
  } else {
    written = save_dataset(ds, target, cfg.gzip);
  }
  for (const auto& p : written) out << p.string() << '\n';
  return 0;
}

int cmd_corrupt(const RunConfig& cfg, std::ostream& out) {
  const MultiViewDataset ds = load_dataset(require_path(cfg.data, "data"));
  CorruptionSpec spec;
  spec.kind = cfg.corruption;
  spec.fraction = cfg.fraction;
  spec.seed = cfg.train.seed;
  MultiViewDataset c = corrupt(ds, spec);
  for (const auto& p : save_dataset(c, require_path(cfg.out, "out"), cfg.gzip)) out << p.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& snapshot, std::ostream& out) {
  const std::string model_path = require_path(cfg.model, "model");
  const MultiViewDataset ds = load_dataset(require_path(cfg.data, "data"));
  const TrainResult result = train(ds, cfg.train);

  ModelFile file;
  file.model = result.model;
  file.config_snapshot = snapshot;
  save_model(model_path, file);

  const fs::path prefix = output_prefix(cfg, model_path);
  const fs::path alm_csv = with_suffix(prefix, ".alm_trace.csv");
  const fs::path obj_csv = with_suffix(prefix, ".objective_trace.csv");
  const fs::path codes_txt = with_suffix(prefix, ".train_codes.txt");
  write_stream(alm_csv, [&](std::ostream& s) { result.diagnostics.alm.write_csv(s); });
  write_stream(obj_csv, [&](std::ostream& s) { result.diagnostics.write_objective_csv(s); });
  write_text(codes_txt, result.database_codes.to_text());

  const auto& d = result.diagnostics;
  out << "model " << model_path << '\n'
      << "alm_iterations " << d.alm.iterations << (d.alm.converged ? " converged" : " not-converged") << '\n'
      << "outer_iterations " << d.outer_iterations << (d.converged ? " converged" : " not-converged") << '\n';
  for (const auto& p : {alm_csv, obj_csv, codes_txt}) out << p.string() << '\n';
  return 0;
}

int cmd_encode(const RunConfig& cfg, std::ostream& out) {
  const ModelFile file = load_model(require_path(cfg.model, "model"));
  const MultiViewDataset ds = load_dataset(require_path(cfg.data, "data"));
  const CodeMatrix codes = encode_dataset(file.model, ds, cfg.encoder);
  const std::string target = require_path(cfg.out, "out");
  write_text(target, codes.to_text());
  out << target << '\n';
  return 0;
}

int cmd_query(const RunConfig& cfg, std::ostream& out) {
  const ModelFile file = load_model(require_path(cfg.model, "model"));
  const MultiViewDataset db = load_dataset(require_path(cfg.db, "db"));
  const MultiViewDataset queries = load_dataset(require_path(cfg.data, "data"));
  const CodeMatrix db_codes = encode_dataset(file.model, db, cfg.encoder);
  const CodeMatrix q_codes = encode_dataset(file.model, queries, cfg.encoder);
  const std::string target = require_path(cfg.out, "out");
  write_stream(target, [&](std::ostream& s) {
    s << "query,rank,item,distance,in_radius\n";
    const auto depth = std::min(cfg.top_k, db_codes.size());
    for (Index q = 0; q < q_codes.size(); ++q) {
      const auto order = hamming_ranking(q_codes, q, db_codes);
      for (Index r = 0; r < depth; ++r) {
        const Index j = order[static_cast<std::size_t>(r)];
        const Index d = hamming(q_codes.row(q), db_codes.row(j));
        s << q << ',' << r << ',' << j << ',' << d << ',' << (d <= cfg.radius ? 1 : 0) << '\n';
      }
    }
  });
  out << target << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const std::string model_path = require_path(cfg.model, "model");
  const ModelFile file = load_model(model_path);
  const MultiViewDataset db = load_dataset(require_path(cfg.db, "db"));
  const MultiViewDataset queries = load_dataset(require_path(cfg.data, "data"));
  const Relevance rel = relevance_for(queries, db);
  const CodeMatrix db_codes = encode_dataset(file.model, db, cfg.encoder);
  const CodeMatrix q_codes = encode_dataset(file.model, queries, cfg.encoder);
  const EvalReport report = evaluate(q_codes, db_codes, rel, cfg.top_k, cfg.radius);

  const fs::path prefix = output_prefix(cfg, model_path);
  const fs::path json = with_suffix(prefix, ".report.json");
  const fs::path pr = with_suffix(prefix, ".pr.csv");
  write_stream(json, [&](std::ostream& s) { report.write_json(s); });
  write_stream(pr, [&](std::ostream& s) { report.write_pr_csv(s); });
  out << "map@" << report.top_k << ' ' << report.map << '\n'
      << "lookup_precision@r" << report.radius << ' ' << report.lookup.mean << " (std " << report.lookup.stddev
      << ", coverage " << report.lookup.coverage << ")\n"
      << json.string() << '\n'
      << pr.string() << '\n';
  return 0;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  const ModelFile file = load_model(require_path(cfg.model, "model"));
  const HashModel& m = file.model;
  // Metadata lines are comments so the whole output reloads with --config.
  out << "# format_version " << file.version << '\n'
      << "# bits " << m.bits() << '\n'
      << "# kernel_landmarks " << m.num_landmarks() << '\n'
      << "# views " << m.landmarks.num_views() << '\n'
      << "# view_dims " << dims_text(model_dims(m)) << '\n'
      << "# sigma";
  for (double s : m.kernel.sigma) out << ' ' << s;
  out << "\n# sigma_concat " << m.kernel.sigma_concat << '\n';
  if (m.base) {
    out << "# base_set " << m.base->size() << " centers, k " << m.base->k << ", sigma " << m.base->sigma << '\n';
  } else {
    out << "# base_set none\n";
  }
  out << "# training config\n" << file.config_snapshot;
  return 0;
}

}  // namespace

void check_model_dims(const HashModel& model, const MultiViewDataset& ds) {
  const auto expected = model_dims(model);
  const auto actual = ds.dims();
  if (expected != actual)
    throw InvalidArgument("dimension mismatch: model expects view dims " + dims_text(expected) + ", dataset '" +
                          ds.name + "' has " + dims_text(actual));
}

CodeMatrix encode_dataset(const HashModel& model, const MultiViewDataset& ds, EncoderPath path) {
  check_model_dims(model, ds);
  if (path == EncoderPath::kernel) return encode_queries(model, ds);
  if (!model.base) throw InvalidArgument("encoder 'prototype' needs a model trained with a base set");
  return prototype_encode_all(ds, *model.base);
}

namespace {

std::string value_text(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}
template <class T>
  requires std::is_integral_v<T>
std::string value_text(T v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else {
    return std::to_string(v);
  }
}
std::string value_text(const std::string& v) { return v; }
std::string value_text(const std::optional<double>& v) { return v ? value_text(*v) : std::string(); }
std::string value_text(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Registers options on the app and remembers how to print each bound value,
// so the training snapshot is a loadable config file.
class Options {
 public:
  explicit Options(CLI::App& app) : app_(app) {}

  template <class T>
  CLI::Option* value(const std::string& key, T& var, const std::string& help = "") {
    printers_.emplace_back(key, [&var] { return value_text(var); });
    return app_.add_option("--" + key, var, help);
  }

  template <class E>
  CLI::Option* choice(const std::string& key, E& var, const std::map<std::string, E>& table,
                      const std::string& help = "") {
    printers_.emplace_back(key, [&var, table] {
      for (const auto& [name, v] : table)
        if (v == var) return name;
      return std::string();
    });
    return app_.add_option("--" + key, var, help)->transform(CLI::CheckedTransformer(table, CLI::ignore_case));
  }

  // Boolean with a --no-<key> negation.
  CLI::Option* toggle(const std::string& key, bool& var, const std::string& help = "") {
    printers_.emplace_back(key, [&var] { return value_text(var); });
    return app_.add_flag("--" + key + ",!--no-" + key, var, help);
  }

  std::string snapshot() const {
    std::string s;
    for (const auto& [key, print] : printers_) s += key + " = " + print() + "\n";
    return s;
  }

 private:
  CLI::App& app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> printers_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Robust multi-view hashing"};
  app.name("rmvh");
  app.set_config("--config", "", "flat 'key = value' file; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  Options opt(app);

  auto& hp = cfg.train.hp;
  auto& tc = cfg.train;
  const std::map<std::string, Preset> presets{{"none", Preset::none}, {"l300-k3", Preset::l300_k3},
                                              {"l500-k5", Preset::l500_k5}};
  const std::map<std::string, LandmarkMode> graph_modes{{"kmeans", LandmarkMode::kmeans},
                                                        {"uniform", LandmarkMode::uniform}};
  const std::map<std::string, KernelLandmarkMode> kernel_modes{{"kmeans", KernelLandmarkMode::kmeans},
                                                               {"uniform", KernelLandmarkMode::uniform_sample}};
  const std::map<std::string, QueryKernelMode> query_modes{{"concat", QueryKernelMode::concat},
                                                           {"view-sum", QueryKernelMode::view_sum},
                                                           {"view-mean", QueryKernelMode::view_mean}};
  const std::map<std::string, RecoveryMode> recoveries{{"alm", RecoveryMode::alm},
                                                       {"view-mean", RecoveryMode::view_mean}};
  const std::map<std::string, ConstraintMode> constraints{{"nonneg", ConstraintMode::nonneg},
                                                          {"simplex", ConstraintMode::simplex}};
  const std::map<std::string, ShrinkMode> shrinks{{"column-l21", ShrinkMode::column_l21},
                                                  {"elementwise", ShrinkMode::elementwise}};
  const std::map<std::string, QStepMode> qsteps{{"exact", QStepMode::exact},
                                                {"scaled", QStepMode::scaled}};
  const std::map<std::string, AveragingMode> averagings{{"m-plus-one", AveragingMode::m_plus_one},
                                                        {"m", AveragingMode::m}};
  const std::map<std::string, CorruptionKind> corruptions{{"gaussian", CorruptionKind::gaussian_fraction},
                                                          {"block", CorruptionKind::block_zero}};
  const std::map<std::string, EncoderPath> encoders{{"kernel", EncoderPath::kernel},
                                                    {"prototype", EncoderPath::prototype}};

  opt.value("seed", tc.seed, "random seed");
  // Hyperparameters.
  opt.value("gamma", hp.gamma, "per-view code consensus weight");
  opt.value("delta", hp.delta, "ridge on W");
  opt.value("alpha", hp.alpha, "nuclear-norm weight");
  opt.value("beta", hp.beta, "regression weight");
  opt.value("lambda", hp.lambda, "l2,1 weight on the view errors");
  opt.value("bits", hp.bits, "code length P");
  opt.value("outer-iters", hp.outer_iters, "maximum outer alternations");
  opt.value("objective-tol", hp.objective_tol, "relative objective change that stops training");
  opt.toggle("orthogonalize", hp.orthogonalize, "keep Y^T Y = N I");
  opt.value("cg-tol", hp.cg_tol, "conjugate-gradient relative tolerance");
  opt.value("cg-max-iters", hp.cg_max_iters, "conjugate-gradient iteration cap");
  // Graph and kernel.
  opt.choice("preset", cfg.preset, presets, "graph preset: none, l300-k3, l500-k5");
  auto* opt_landmarks = opt.value("landmarks", tc.graph.landmarks, "anchor-graph landmarks L");
  auto* opt_k = opt.value("graph-k", tc.graph.k, "nearest landmarks per sample");
  opt.choice("graph-landmark-mode", tc.graph.mode, graph_modes);
  opt.value("graph-kmeans-iters", tc.graph.kmeans_iters);
  opt.value("graph-bandwidth", tc.graph.bandwidth, "anchor-graph bandwidth t (default self-scaled)");
  opt.value("kernel-landmarks", tc.kernel.landmarks, "kernel landmarks R (0: R = L)");
  opt.choice("kernel-landmark-mode", tc.kernel.mode, kernel_modes);
  opt.value("kernel-kmeans-iters", tc.kernel.kmeans_iters);
  opt.value("self-tuning-k", tc.kernel.self_tuning_k, "neighbor rank for kernel bandwidths");
  opt.choice("query-mode", tc.kernel.query_mode, query_modes, "concat, view-sum, view-mean");
  opt.toggle("share-landmarks", tc.kernel.share_landmarks);
  // Recovery.
  opt.choice("recovery", tc.recovery, recoveries, "alm or view-mean (no recovery)");
  opt.value("alm-mu0", tc.alm.mu0, "initial penalty (<= 0: automatic)");
  opt.value("alm-rho", tc.alm.rho);
  opt.value("alm-mu-max", tc.alm.mu_max);
  opt.value("alm-tol", tc.alm.tol);
  opt.value("alm-max-iters", tc.alm.max_iters);
  opt.choice("alm-constraint", tc.alm.constraint, constraints);
  opt.choice("alm-shrink", tc.alm.shrink, shrinks);
  opt.choice("alm-q-step", tc.alm.q_step, qsteps);
  opt.choice("alm-averaging", tc.alm.averaging, averagings);
  opt.value("alm-refresh-every", tc.alm_refresh_every, "re-run recovery every T outer iterations");
  // Out-of-sample.
  opt.toggle("build-base", tc.build_base);
  opt.value("base-size", tc.base.size, "base-set size Z (clamped to N)");
  opt.value("oos-k", tc.base.neighbors, "base-set neighbors per query");
  opt.value("base-kmeans-iters", tc.base.kmeans_iters);
  // Synthesis and corruption.
  opt.value("clusters", cfg.clusters);
  opt.value("per-cluster", cfg.per_cluster);
  opt.value("dims", cfg.dims, "per-view dimensions, comma separated")->delimiter(',');
  opt.value("view-noise", cfg.view_noise);
  opt.value("n-query", cfg.n_query, "hold out this many samples as queries");
  opt.toggle("gzip", cfg.gzip, "gzip the written view files");
  opt.choice("corruption", cfg.corruption, corruptions, "gaussian or block");
  opt.value("fraction", cfg.fraction, "corrupted fraction");
  // Retrieval.
  opt.choice("encoder", cfg.encoder, encoders, "kernel or prototype");
  opt.value("top-k", cfg.top_k, "ranking depth for MAP");
  opt.value("radius", cfg.radius, "Hamming radius for hash lookup");
  // Paths.
  opt.value("data", cfg.data, "dataset manifest (queries for query/eval)");
  opt.value("db", cfg.db, "database manifest");
  opt.value("query-out", cfg.query_out, "manifest for held-out queries (synth)");
  opt.value("model", cfg.model, "model file");
  opt.value("out", cfg.out, "output path or prefix");

  auto* synth = app.add_subcommand("synth", "write a synthetic multi-view dataset");
  auto* corrupt_cmd = app.add_subcommand("corrupt", "corrupt a dataset");
  auto* train_cmd = app.add_subcommand("train", "train a model; writes model, traces and training codes");
  auto* encode = app.add_subcommand("encode", "encode a dataset to binary codes");
  auto* query = app.add_subcommand("query", "Hamming-rank a database for each query");
  auto* eval = app.add_subcommand("eval", "MAP, hash-lookup precision and PR curve");
  auto* inspect = app.add_subcommand("inspect", "print model metadata");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    apply_preset(cfg, opt_landmarks->count() > 0, opt_k->count() > 0);
    cfg.validate();
    if (*synth) return cmd_synth(cfg, out);
    if (*corrupt_cmd) return cmd_corrupt(cfg, out);
    if (*train_cmd) return cmd_train(cfg, opt.snapshot(), out);
    if (*encode) return cmd_encode(cfg, out);
    if (*query) return cmd_query(cfg, out);
    if (*eval) return cmd_eval(cfg, out);
    if (*inspect) return cmd_inspect(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace rmvh
