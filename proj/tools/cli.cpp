// Copyright 2026 The usdh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "usdh/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "usdh/error.hpp"
#include "usdh/feature_io.hpp"
#include "usdh/gradcheck.hpp"
#include "usdh/hamming_index.hpp"
#include "usdh/hash_head.hpp"
#include "usdh/lsh.hpp"
#include "usdh/manifest.hpp"
#include "usdh/synth.hpp"
#include "usdh/trainer.hpp"

namespace usdh::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

// String-valued options of one subcommand, resolved in precedence order.
struct Options {
  KeyValues defaults;
  KeyValues flags;
  std::string config;
  KeyValues resolved;

  void resolve() {
    resolved = defaults;
    if (!config.empty()) {
      KeyValues file;
      try {
        file = read_key_values(config);
      } catch (const InvalidArgument& e) {
        throw UsageError(config + ": " + e.what());
      }
      for (const auto& [k, v] : file) {
        if (!defaults.contains(k)) throw UsageError(config + ": unknown key '" + k + "'");
        resolved[k] = v;
      }
    }
    for (const auto& [k, v] : flags) resolved[k] = v;
  }

  const std::string& str(const std::string& key) const { return resolved.at(key); }
  bool has(const std::string& key) const { return !resolved.at(key).empty(); }

  const std::string& required(const std::string& key) const {
    if (!has(key)) throw UsageError(dashed(key) + " is required");
    return str(key);
  }

  template <class T>
  T number(const std::string& key) const {
    const std::string& s = required(key);
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw UsageError(dashed(key) + ": not a valid number: '" + s + "'");
    }
    return v;
  }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0" || s.empty()) return false;
    throw UsageError(dashed(key) + ": expected true or false, got '" + s + "'");
  }

  void echo(const std::string& command, std::ostream& out) const {
    out << "# usdh " << command << "\n";
    for (const auto& [k, v] : resolved) out << "# " << k << "=" << v << "\n";
  }
};

void add(CLI::App* app, Options& o, const std::string& key, const std::string& help,
         const std::string& def = "") {
  o.defaults[key] = def;
  auto* opt = app->add_option_function<std::string>(
      dashed(key), [&o, key](const std::string& v) { o.flags[key] = v; }, help);
  if (!def.empty()) opt->description(help + " (default " + def + ")");
}

void add_switch(CLI::App* app, Options& o, const std::string& key, const std::string& help) {
  o.defaults[key] = "false";
  app->add_flag_callback(dashed(key), [&o, key] { o.flags[key] = "true"; }, help);
}

void add_train_options(CLI::App* app, Options& o) {
  const KeyValues defaults = TrainConfig{}.to_key_values();
  const std::map<std::string, std::string> help = {
      {"bits", "code length k"},
      {"rho", "similarity scale"},
      {"w_sem", "semantic term weight"},
      {"alpha", "quantization term weight"},
      {"beta", "bit-balance term weight"},
      {"gamma", "rotation term weight"},
      {"lr", "learning rate"},
      {"momentum", "momentum in [0,1)"},
      {"epochs_stage1", "stage-1 epochs"},
      {"epochs_stage2", "stage-2 epochs (needs rotation blocks)"},
      {"batch_size", "items per batch"},
      {"seed", "seed for init and batching"},
      {"rotation_angles", "comma-separated degrees, one per rotation block"},
  };
  for (const auto& [key, value] : defaults) add(app, o, key, help.at(key), value);
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg;
  KeyValues kv;
  for (const auto& [key, value] : TrainConfig{}.to_key_values()) kv[key] = o.str(key);
  try {
    cfg.apply(kv);
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::vector<Label> labels_of(const std::string& path) {
  const FeatureSet fs = read_features(path);
  if (!fs.has_labels()) throw InvalidArgument(path + ": feature file carries no labels");
  return *fs.labels();
}

// Labels for each codebook row, looked up by item id.
std::vector<Label> labels_by_row(const BinaryCodebook& cb, const std::vector<Label>& labels,
                                 const std::string& what) {
  std::vector<Label> out(cb.n());
  for (std::size_t i = 0; i < cb.n(); ++i) {
    if (cb.id(i) >= labels.size()) {
      throw ShapeError(what + ": item id " + std::to_string(cb.id(i)) + " has no label (" +
                       std::to_string(labels.size()) + " labels)");
    }
    out[i] = labels[cb.id(i)];
  }
  return out;
}

Bits parse_code(const std::string& s) {
  Bits bits;
  bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw UsageError("--code: expected a string of 0 and 1");
    bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return bits;
}

void print_result(std::ostream& out, std::size_t q, const QueryResult& result) {
  for (std::size_t r = 0; r < result.size(); ++r) {
    out << "query=" << q << " rank=" << r + 1 << " id=" << result[r].id
        << " distance=" << result[r].distance << "\n";
  }
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig sc;
  sc.clusters = o.number<std::uint32_t>("clusters");
  sc.n = o.number<std::uint32_t>("n");
  sc.d = o.number<std::uint32_t>("d");
  sc.separation = o.number<double>("separation");
  sc.sigma = o.number<double>("sigma");
  sc.seed = o.number<std::uint64_t>("seed");
  const std::string out_path = o.required("out");
  const auto queries = o.number<std::size_t>("queries");
  std::vector<double> angles;
  try {
    angles = parse_real_list(o.str("angles"));
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--angles: ") + e.what());
  }

  FeatureSet fs = make_clusters(sc);
  if (!angles.empty()) fs = add_rotations(fs, angles);

  KeyValues manifest = o.resolved;
  manifest.erase("out");
  manifest.erase("query_out");
  manifest["generator"] = "usdh synth";
  auto emit = [&](const FeatureSet& part, const std::string& path, const std::string& role) {
    write_features(part, path);
    KeyValues m = manifest;
    m["role"] = role;
    m["n"] = std::to_string(part.n());
    m["rotations"] = std::to_string(part.rotations());
    write_manifest(m, path);
    out << "wrote " << path << " n=" << part.n() << " d=" << part.d() << " R=" << part.rotations()
        << "\n";
  };
  if (queries == 0) {
    emit(fs, out_path, "all");
    return kExitOk;
  }
  const std::string query_path = o.required("query_out");
  const Split split = holdout_split(fs, queries, sc.seed);
  emit(split.database, out_path, "database");
  emit(split.queries, query_path, "queries");
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const TrainConfig cfg = train_config(o);
  const FeatureSet fs = read_features(o.required("features"));
  const std::string out_path = o.required("out");

  std::ofstream log_file;
  if (o.has("log")) {
    log_file.open(o.str("log"), std::ios::trunc);
    if (!log_file) throw Error("cannot open log file " + o.str("log"));
  }
  std::ostream& log = o.has("log") ? static_cast<std::ostream&>(log_file) : out;
  const TrainTrace trace = train(fs, cfg, [&](const EpochRecord& r) {
    log << r.loss.log_line(r.epoch) << "\n";
  });
  write_head(trace.params, out_path);
  out << "wrote " << out_path << " k=" << trace.params.k() << " d=" << trace.params.d()
      << " epochs=" << trace.epochs.size() << "\n";
  return kExitOk;
}

int cmd_encode(const Options& o, std::ostream& out) {
  const FeatureSet fs = read_features(o.required("features"));
  const auto block = o.number<std::size_t>("block");
  const std::string out_path = o.required("out");
  BinaryCodebook cb;
  if (o.flag("lsh")) {
    const auto bits = o.number<std::uint32_t>("bits");
    const auto seed = o.number<std::uint64_t>("seed");
    const LshModel model =
        o.has("fit") ? fit_lsh(read_features(o.str("fit")), bits, seed) : fit_lsh(fs, bits, seed);
    if (block >= fs.blocks()) throw InvalidArgument("encode: no block " + std::to_string(block));
    cb = lsh_encode(model, fs, block);
  } else {
    cb = encode_items(read_head(o.required("params")), fs, block);
  }
  write_codebook(cb, out_path);
  out << "wrote " << out_path << " n=" << cb.n() << " k=" << cb.k() << "\n";
  return kExitOk;
}

int cmd_query(const Options& o, std::ostream& out) {
  const BinaryCodebook index = read_codebook(o.required("index"));
  const auto K = o.number<std::size_t>("k");
  if (o.has("code")) {
    print_result(out, 0, query(index, parse_code(o.str("code")), K));
    return kExitOk;
  }
  if (!o.has("features") || !o.has("params")) {
    throw UsageError("query needs --code, or --features with --params");
  }
  const BinaryCodebook queries =
      encode_items(read_head(o.str("params")), read_features(o.str("features")));
  std::size_t first = 0;
  std::size_t last = queries.n();
  if (o.has("row")) {
    first = o.number<std::size_t>("row");
    if (first >= queries.n()) {
      throw InvalidArgument("--row " + std::to_string(first) + " out of range (" +
                            std::to_string(queries.n()) + " rows)");
    }
    last = first + 1;
  }
  for (std::size_t q = first; q < last; ++q) print_result(out, q, query(index, queries.code(q), K));
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const BinaryCodebook index = read_codebook(o.required("index"));
  const BinaryCodebook queries = read_codebook(o.required("queries"));
  const auto K = o.number<std::size_t>("K");
  const auto db_labels = labels_by_row(index, labels_of(o.required("labels")), "index");
  const auto q_labels = labels_by_row(queries, labels_of(o.required("query_labels")), "queries");
  const EvalReport report = evaluate_map(index, queries, q_labels, db_labels, K);
  out << report.summary();
  if (o.has("csv")) {
    std::ofstream csv(o.str("csv"), std::ios::trunc);
    if (!csv) throw Error("cannot open " + o.str("csv"));
    csv << report.per_query_csv(queries.ids());
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const TrainConfig cfg = train_config(o);
  std::vector<double> rhos;
  try {
    rhos = parse_real_list(o.str("rho_list"));
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--rho-list: ") + e.what());
  }
  const FeatureSet train_set = read_features(o.required("features"));
  const FeatureSet queries = read_features(o.required("queries"));
  const auto rows = rho_sweep(train_set, queries, cfg, rhos, o.number<std::size_t>("K"));
  out << format_sweep_table(rows, o.number<std::size_t>("K"));
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  const std::string& which = o.str("loss");
  std::vector<LossTerm> terms;
  if (which == "all") {
    terms = {LossTerm::kSemantic, LossTerm::kQuantization, LossTerm::kInformation,
             LossTerm::kRotation, LossTerm::kTotal};
  } else {
    try {
      terms = {parse_loss_term(which)};
    } catch (const InvalidArgument& e) {
      throw UsageError(std::string("--loss: ") + e.what());
    }
  }
  const auto trials = o.number<std::size_t>("trials");
  const auto epsilon = o.number<double>("epsilon");
  const auto tolerance = o.number<double>("tolerance");
  bool ok = true;
  for (LossTerm term : terms) {
    std::mt19937_64 rng(o.number<std::uint64_t>("seed"));
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < trials; ++t) {
      const GradcheckInstance inst = sample_instance(term, rng);
      worst = std::max(worst, gradcheck(term, inst, epsilon).max_rel_error);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = worst <= tolerance;
    ok = ok && pass;
    char buf[192];
    std::snprintf(buf, sizeof(buf), "loss=%s trials=%zu max_rel_error=%.3e seconds=%.3f %s\n",
                  std::string(loss_term_name(term)).c_str(), trials, worst, secs,
                  pass ? "ok" : "FAILED");
    out << buf;
  }
  return ok ? kExitOk : kExitRuntime;
}

QueryResult brute_force(const BinaryCodebook& index, std::span<const std::uint64_t> q,
                        std::size_t K) {
  const auto qbits = unpack_bits(q, index.k());
  QueryResult all(index.n());
  for (std::size_t i = 0; i < index.n(); ++i) {
    std::uint32_t dist = 0;
    for (std::size_t j = 0; j < index.k(); ++j) dist += index.bit(i, j) != qbits[j];
    all[i] = Neighbor{index.id(i), dist, i};
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  all.resize(std::min(K, all.size()));
  return all;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const auto n = o.number<std::size_t>("n");
  const auto bits = o.number<std::uint32_t>("bits");
  const auto nq = o.number<std::size_t>("queries");
  const auto K = o.number<std::size_t>("K");
  const auto sample = std::min(o.number<std::size_t>("sample"), nq);
  if (n == 0 || bits == 0 || nq == 0 || K == 0) {
    throw UsageError("bench: --n, --bits, --queries and --K must be positive");
  }
  std::mt19937_64 rng(o.number<std::uint64_t>("seed"));
  const std::size_t wpc = BinaryCodebook::words_per_code(bits);
  const std::uint64_t last_mask = bits % 64 == 0 ? ~0ULL : (1ULL << (bits % 64)) - 1;
  auto random_codes = [&](std::size_t count) {
    std::vector<std::uint64_t> words(count * wpc);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t w = 0; w < wpc; ++w) words[i * wpc + w] = rng();
      words[i * wpc + wpc - 1] &= last_mask;
    }
    return words;
  };
  std::vector<ItemId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  const BinaryCodebook index(bits, std::move(ids), random_codes(n));
  const std::vector<std::uint64_t> qwords = random_codes(nq);

  std::vector<QueryResult> results(nq);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t q = 0; q < nq; ++q) {
    results[q] = query(index, std::span(qwords).subspan(q * wpc, wpc), K);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double throughput = static_cast<double>(n) * static_cast<double>(nq) / std::max(secs, 1e-9);

  std::size_t mismatches = 0;
  for (std::size_t q = 0; q < sample; ++q) {
    if (results[q] != brute_force(index, std::span(qwords).subspan(q * wpc, wpc), K)) ++mismatches;
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "n=%zu bits=%u queries=%zu K=%zu seconds=%.6f codes_per_second=%.4g\n"
                "parity_sample=%zu parity=%s\n",
                n, bits, nq, K, secs, throughput, sample, mismatches == 0 ? "ok" : "MISMATCH");
  out << buf;
  return mismatches == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"usdh: unsupervised deep hashing with rotation invariance"};
  app.name("usdh");
  app.require_subcommand(1);

  using Handler = std::function<int(const Options&, std::ostream&)>;
  std::map<std::string, Options> options;
  std::map<std::string, Handler> handlers;
  auto sub = [&](const std::string& name, const std::string& help, Handler h) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", options[name].config, "key=value file; flags override it");
    handlers[name] = std::move(h);
    return s;
  };

  {
    CLI::App* s = sub("synth", "write a labeled Gaussian-mixture feature file", cmd_synth);
    Options& o = options["synth"];
    add(s, o, "clusters", "number of clusters", "3");
    add(s, o, "n", "items", "600");
    add(s, o, "d", "dimension", "64");
    add(s, o, "separation", "distance between cluster means in units of sigma", "6");
    add(s, o, "sigma", "per-coordinate within-cluster std", "1");
    add(s, o, "seed", "random seed", "42");
    add(s, o, "out", "output feature file (database part when --queries > 0)");
    add(s, o, "queries", "hold out this many rows as queries", "0");
    add(s, o, "query_out", "output feature file for held-out queries");
    add(s, o, "angles", "comma-separated rotation angles in degrees");
  }
  {
    CLI::App* s = sub("train", "train a hashing head", cmd_train);
    Options& o = options["train"];
    add(s, o, "features", "input feature file");
    add(s, o, "out", "output head parameter file");
    add(s, o, "log", "training log file (default: stdout)");
    add_train_options(s, o);
  }
  {
    CLI::App* s = sub("encode", "encode features into a codebook", cmd_encode);
    Options& o = options["encode"];
    add(s, o, "features", "input feature file");
    add(s, o, "params", "head parameter file");
    add(s, o, "out", "output codebook file");
    add(s, o, "block", "feature block to encode (0 = reference)", "0");
    add_switch(s, o, "lsh", "use random-hyperplane codes instead of a trained head");
    add(s, o, "bits", "LSH code length", "32");
    add(s, o, "seed", "LSH seed", "42");
    add(s, o, "fit", "feature file the LSH mean is fitted on (default: --features)");
  }
  {
    CLI::App* s = sub("query", "top-k Hamming search", cmd_query);
    Options& o = options["query"];
    add(s, o, "index", "codebook file");
    add(s, o, "code", "query bit string such as 0110");
    add(s, o, "features", "query feature file");
    add(s, o, "params", "head parameter file for --features");
    add(s, o, "row", "only this row of --features");
    add(s, o, "k", "neighbors per query", "10");
  }
  {
    CLI::App* s = sub("eval", "MAP@K of a query codebook against an index", cmd_eval);
    Options& o = options["eval"];
    add(s, o, "index", "database codebook");
    add(s, o, "queries", "query codebook");
    add(s, o, "labels", "feature file holding database labels");
    add(s, o, "query_labels", "feature file holding query labels");
    add(s, o, "K", "cutoff", "100");
    add(s, o, "csv", "per-query AP output file");
  }
  {
    CLI::App* s = sub("sweep", "train and evaluate once per rho", cmd_sweep);
    Options& o = options["sweep"];
    add(s, o, "features", "training and database feature file");
    add(s, o, "queries", "query feature file");
    add(s, o, "rho_list", "comma-separated rho values", "1,1/2,1/4,1/8");
    add(s, o, "K", "cutoff", "100");
    add_train_options(s, o);
  }
  {
    CLI::App* s = sub("gradcheck", "finite-difference check of the loss gradients", cmd_gradcheck);
    Options& o = options["gradcheck"];
    add(s, o, "loss", "j1, j2, j3, j4, total or all", "all");
    add(s, o, "trials", "random instances per loss", "100");
    add(s, o, "seed", "random seed", "42");
    add(s, o, "epsilon", "central-difference step", "1e-05");
    add(s, o, "tolerance", "maximum relative error", "0.0001");
  }
  {
    CLI::App* s = sub("bench", "packed Hamming scan throughput", cmd_bench);
    Options& o = options["bench"];
    add(s, o, "n", "database codes", "100000");
    add(s, o, "bits", "code length", "64");
    add(s, o, "queries", "queries timed", "100");
    add(s, o, "K", "neighbors per query", "100");
    add(s, o, "sample", "queries checked against brute force", "10");
    add(s, o, "seed", "random seed", "42");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Options& o = options.at(name);
  try {
    o.resolve();
    o.echo(name, out);
    return handlers.at(name)(o, out);
  } catch (const UsageError& e) {
    err << "usdh " << name << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "usdh " << name << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace usdh::cli
