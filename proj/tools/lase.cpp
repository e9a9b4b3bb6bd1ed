// lase: command-line front end for training, evaluation, kernel checks and
// the validation experiments.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 numerical failure (divergence or a check outside tolerance).

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lase/atomic_file.hpp"
#include "lase/checkpoint.hpp"
#include "lase/config.hpp"
#include "lase/experiments.hpp"
#include "lase/graph_io.hpp"
#include "lase/kernels.hpp"
#include "lase/synth.hpp"
#include "lase/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lase;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw UsageError("bad snr value '" + s + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_out(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  write_file_atomic(dir / name, text);
}

struct Common {
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

struct DataOpts {
  std::string nodes;
  std::string links;
  std::string manifest;
  std::string kind;
  std::size_t n = 1000;
  bool directed = false;

  void attach(CLI::App* app) {
    app->add_option("--nodes", nodes, "node file (id<TAB>label<TAB>features)");
    app->add_option("--links", links, "link file (src<TAB>dst<TAB>features)");
    app->add_option("--manifest", manifest, "JSON manifest {d_node, d_link, n_labels, undirected}");
    app->add_option("--kind", kind, "synthetic graph instead of files")
        ->check(CLI::IsMember({"interaction", "concat-blind", "random"}));
    app->add_option("--n", n, "synthetic graph size");
    app->add_flag("--directed", directed, "treat links as directed");
  }
};

struct Dataset {
  AttributedGraph graph;
  Split split;
};

Dataset load_dataset(const DataOpts& d, std::uint64_t seed) {
  if (!d.kind.empty()) {
    if (!d.nodes.empty() || !d.links.empty()) throw UsageError("--kind cannot be combined with --nodes/--links");
    auto sg = synth_graph(parse_synth_kind(d.kind), d.n, seed);
    return {std::move(sg.graph), std::move(sg.split)};
  }
  if (d.nodes.empty() || d.links.empty()) throw UsageError("need --nodes and --links, or --kind");
  std::optional<GraphManifest> manifest;
  if (!d.manifest.empty()) manifest = load_manifest(d.manifest);
  auto g = load_graph(d.nodes, d.links, !d.directed, manifest);
  auto split = make_split(g, synth::kSplitFractions, seed);
  return {std::move(g), std::move(split)};
}

struct RunOverrides {
  std::string config;
  std::string arch;
  std::string strategy;
  std::optional<std::size_t> sample_size;
  std::optional<std::size_t> refresh_k;
  std::string snr;

  void attach(CLI::App* app, bool need_config) {
    auto* c = app->add_option("--config", config, "TrainRun JSON file");
    if (need_config) c->required();
    app->add_option("--arch", arch, "override architecture")->check(CLI::IsMember({"rw", "wl", "sage", "concat"}));
    app->add_option("--strategy", strategy, "override sampling strategy")
        ->check(CLI::IsMember({"full", "uniform", "gate", "minvar"}));
    app->add_option("--sample-size", sample_size, "override sample size s");
    app->add_option("--refresh-k", refresh_k, "override refresh interval k");
    app->add_option("--snr", snr, "link-attribute SNR (number or inf)");
  }

  TrainRun resolve(const Common& common) const {
    TrainRun run;
    if (!config.empty()) {
      if (!fs::exists(config)) throw UsageError("config file not found: " + config);
      run = load_train_run(config);
    }
    if (!arch.empty()) run.stack.arch = parse_architecture(arch);
    if (!strategy.empty()) run.plan.strategy = parse_strategy(strategy);
    if (sample_size) run.plan.sample_size = *sample_size;
    if (refresh_k) run.plan.refresh_interval = *refresh_k;
    if (!snr.empty()) run.snr = parse_snr(snr);
    if (common.seed) run.seed = *common.seed;
    run.validate();
    return run;
  }
};

std::string metrics_csv(const MetricHistory& h) {
  std::string s = "epoch,loss,val_f1\n";
  for (const auto& e : h.epochs) s += std::to_string(e.epoch) + "," + num(e.loss) + "," + num(e.val_f1) + "\n";
  return s;
}

json history_json(const MetricHistory& h) {
  return {{"epochs", h.epochs.size()},
          {"best_epoch", h.best_epoch},
          {"best_val_f1", h.best_val_f1},
          {"test_f1", h.test_f1},
          {"batches", h.batches},
          {"refreshes", h.refreshes}};
}

EpochHook progress() {
  return [](const EpochRecord& e) {
    std::printf("epoch %4zu  loss %.5f  val_f1 %.4f  (%.2fs)\n", e.epoch, e.loss, e.val_f1, e.seconds);
    std::fflush(stdout);
  };
}

// ---------------------------------------------------------------------------

int cmd_train(const Common& common, const DataOpts& data, const RunOverrides& ov) {
  const TrainRun run = ov.resolve(common);
  const auto ds = load_dataset(data, run.seed);
  auto result = train(ds.graph, ds.split, run, progress());
  const fs::path out(common.out);
  json extra = {{"config", train_run_to_json(run)},
                {"d_node", ds.graph.d_node()},
                {"d_link", ds.graph.d_link()},
                {"n_labels", ds.graph.n_labels()},
                {"split", split_to_json(ds.split)}};
  fs::create_directories(out);
  save_checkpoint(out / "model", result.model.parameters(), run.seed, extra);
  write_out(out, "metrics.csv", metrics_csv(result.history));
  json summary = history_json(result.history);
  summary["config"] = train_run_to_json(run);
  summary["train_nodes"] = ds.split.train.size();
  summary["val_nodes"] = ds.split.val.size();
  summary["test_nodes"] = ds.split.test.size();
  write_out(out, "summary.json", summary.dump(2) + "\n");
  std::printf("best epoch %zu  val_f1 %.4f  test_f1 %.4f\n", result.history.best_epoch, result.history.best_val_f1,
              result.history.test_f1);
  return 0;
}

int cmd_eval(const Common& common, const DataOpts& data, const std::string& checkpoint, const std::string& set) {
  const fs::path base(checkpoint);
  fs::path manifest_path = base;
  manifest_path += ".json";
  if (!fs::exists(manifest_path)) throw UsageError("checkpoint not found: " + manifest_path.string());
  std::ifstream in(manifest_path);
  const json manifest = json::parse(in);
  const json& extra = manifest.at("extra");
  const TrainRun run = train_run_from_json(extra.at("config"));
  const auto ds = load_dataset(data, common.seed_or(run.seed));
  if (ds.graph.d_node() != extra.at("d_node").get<std::size_t>() ||
      ds.graph.d_link() != extra.at("d_link").get<std::size_t>()) {
    throw CheckpointError("graph feature dimensions differ from the checkpoint");
  }
  Model model(run.stack, ds.graph.d_node(), ds.graph.d_link(), extra.at("n_labels").get<std::size_t>(), run.seed);
  load_checkpoint(base, model.parameters());
  const Split split = split_from_json(extra.at("split"));
  std::vector<NodeId> nodes;
  if (set == "train") nodes = split.train;
  if (set == "val") nodes = split.val;
  if (set == "test") nodes = split.test;
  if (set == "all") {
    for (const auto& n : ds.graph.nodes()) {
      if (n.label) nodes.push_back(n.id);
    }
  }
  const double f1 = evaluate(ds.graph, model, nodes);
  write_out(common.out, "eval.json", json{{"set", set}, {"nodes", nodes.size()}, {"micro_f1", f1}}.dump(2) + "\n");
  std::printf("%s micro-F1 %.4f over %zu nodes\n", set.c_str(), f1, nodes.size());
  return 0;
}

int cmd_kernel(const Common& common, const DataOpts& data, const std::string& nodes2, const std::string& links2,
               std::size_t hops, double decay, std::size_t gram_random) {
  const kernels::KernelConfig kc{decay, hops};
  kc.validate();
  if (gram_random > 0) {
    std::mt19937_64 rng(common.seed_or(kDefaultSeed));
    std::vector<AttributedGraph> graphs;
    for (std::size_t i = 0; i < gram_random; ++i) graphs.push_back(experiments::random_small_graph(rng));
    const auto gram = kernels::rw_gram(graphs, kc);
    std::string csv;
    for (std::size_t i = 0; i < gram_random; ++i) {
      for (std::size_t j = 0; j < gram_random; ++j) csv += (j ? "," : "") + num(gram[i * gram_random + j]);
      csv += "\n";
    }
    write_out(common.out, "gram.csv", csv);
    std::printf("wrote %zu x %zu Gram matrix\n", gram_random, gram_random);
    return 0;
  }
  const auto g1 = load_dataset(data, common.seed_or(kDefaultSeed)).graph;
  AttributedGraph g2 = g1;
  if (!nodes2.empty() || !links2.empty()) {
    if (nodes2.empty() || links2.empty()) throw UsageError("need both --nodes2 and --links2");
    g2 = load_graph(nodes2, links2, !data.directed);
  }
  const double dp = kernels::rw_kernel_dp(g1, g2, kc);
  std::optional<double> enumerated;
  try {
    enumerated = kernels::rw_kernel_enumerate(g1, g2, kc);
  } catch (const kernels::EnumerationBudgetExceeded& e) {
    std::printf("enumeration skipped: %s\n", e.what());
  }
  json j = {{"hops", hops}, {"decay", decay}, {"dp", dp}};
  double rel = 0.0;
  if (enumerated) {
    rel = std::abs(dp - *enumerated) / std::max(1.0, std::abs(*enumerated));
    j["enumerate"] = *enumerated;
    j["rel_err"] = rel;
  }
  write_out(common.out, "kernel.json", j.dump(2) + "\n");
  std::printf("K = %s (dp)%s\n", num(dp).c_str(), enumerated ? (", " + num(*enumerated) + " (enumeration)").c_str() : "");
  if (rel >= 1e-9) throw CheckFailed("dp and enumeration disagree, rel_err " + num(rel));
  return 0;
}

int cmd_theorem1(const Common& common, const DataOpts& data, std::size_t hops, double decay, std::size_t trials,
                 std::size_t hidden) {
  std::optional<AttributedGraph> fixed;
  if (!data.nodes.empty() || !data.links.empty() || !data.kind.empty()) {
    fixed = load_dataset(data, common.seed_or(kDefaultSeed)).graph;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows =
      experiments::theorem1_trials(fixed ? &*fixed : nullptr, hops, decay, trials, hidden, common.seed_or(kDefaultSeed));
  double worst = 0.0;
  json arr = json::array();
  for (const auto& r : rows) {
    worst = std::max(worst, r.rel_err);
    arr.push_back({{"trial", r.trial}, {"k", r.k}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"rel_err", r.rel_err}});
  }
  write_out(common.out, "theorem1.json",
            json{{"hops", hops}, {"decay", decay}, {"max_rel_err", worst}, {"checks", arr}}.dump(2) + "\n");
  std::printf("%zu checks, max rel_err %.3e (%.2fs)\n", rows.size(), worst,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  if (!(worst < 1e-9)) throw CheckFailed("network/kernel identity violated");
  return 0;
}

int cmd_figure3(const Common& common, std::size_t trials, std::size_t depth, std::size_t hidden) {
  const auto rows = experiments::figure3_trials(trials, depth, hidden, common.seed_or(kDefaultSeed));
  double concat_max = 0.0;
  std::size_t rw_sep = 0, sage_sep = 0;
  json arr = json::array();
  for (const auto& r : rows) {
    concat_max = std::max(concat_max, r.concat_diff);
    rw_sep += r.rw_diff > 1e-6 ? 1 : 0;
    sage_sep += r.sage_diff > 1e-6 ? 1 : 0;
    arr.push_back({{"trial", r.trial}, {"concat", r.concat_diff}, {"rw", r.rw_diff}, {"sage", r.sage_diff}});
  }
  const std::size_t need = (trials * 99 + 99) / 100;
  const bool ok = concat_max < 1e-12 && rw_sep >= need && sage_sep >= need;
  write_out(common.out, "figure3.json",
            json{{"trials", trials},
                 {"depth", depth},
                 {"concat_max_diff", concat_max},
                 {"rw_separated", rw_sep},
                 {"sage_separated", sage_sep},
                 {"pass", ok},
                 {"rows", arr}}
                    .dump(2) +
                "\n");
  std::printf("concat max diff %.3e, rw separated %zu/%zu, sage separated %zu/%zu\n", concat_max, rw_sep, trials,
              sage_sep, trials);
  if (!ok) throw CheckFailed("paired neighbourhoods not handled as expected");
  return 0;
}

int cmd_sample_variance(const Common& common, std::size_t neighborhoods, std::size_t max_degree, std::size_t draws) {
  const auto rows = experiments::estimator_study(neighborhoods, max_degree, draws, common.seed_or(kDefaultSeed));
  std::string csv = "strategy,neighborhood_id,degree,analytic_var,empirical_var,max_z\n";
  std::size_t biased = 0, mismatched = 0, misordered = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv += to_string(r.strategy) + "," + std::to_string(r.neighborhood) + "," + std::to_string(r.degree) + "," +
           num(r.analytic_var) + "," + num(r.empirical_var) + "," + num(r.max_z) + "\n";
    if (!r.unbiased) ++biased;
    if (std::abs(r.empirical_var - r.analytic_var) > 0.05 * r.analytic_var + 1e-12) ++mismatched;
  }
  for (std::size_t i = 0; i + 2 < rows.size(); i += 3) {
    // Rows come in (uniform, gate, min_var) triples per neighbourhood.
    if (!(rows[i + 2].analytic_var <= rows[i].analytic_var && rows[i + 2].analytic_var <= rows[i + 1].analytic_var)) {
      ++misordered;
    }
  }
  write_out(common.out, "variance.csv", csv);
  std::printf("%zu estimator rows: %zu outside 3 SE, %zu variance mismatches > 5%%, %zu ordering violations\n",
              rows.size(), biased, mismatched, misordered);
  if (biased + mismatched + misordered > 0) throw CheckFailed("estimator statistics outside tolerance");
  return 0;
}

int cmd_snr_sweep(const Common& common, const DataOpts& data, const RunOverrides& ov, const std::string& values) {
  TrainRun run = ov.resolve(common);
  const auto ds = load_dataset(data, run.seed);
  std::vector<double> snrs;
  for (const auto& s : split_list(values)) snrs.push_back(parse_snr(s));
  if (snrs.empty()) throw UsageError("--snr-values is empty");
  std::string csv = "snr,test_f1,best_val_f1\n";
  for (const auto& row : snr_sweep(ds.graph, ds.split, run, snrs)) {
    csv += num(row.snr) + "," + num(row.test_f1) + "," + num(row.best_val_f1) + "\n";
    std::printf("snr %-6s test_f1 %.4f\n", num(row.snr).c_str(), row.test_f1);
  }
  write_out(common.out, "snr.csv", csv);
  return 0;
}

int cmd_strategy_compare(const Common& common, const DataOpts& data, const RunOverrides& ov,
                         const std::string& strategies) {
  TrainRun run = ov.resolve(common);
  const auto ds = load_dataset(data, run.seed);
  std::vector<SamplingStrategy> list;
  for (const auto& s : split_list(strategies)) list.push_back(parse_strategy(s));
  std::string csv = "strategy,epoch,val_accuracy\n";
  for (const auto& c : strategy_comparison(ds.graph, ds.split, run, list)) {
    for (const auto& e : c.history.epochs) csv += to_string(c.strategy) + "," + std::to_string(e.epoch) + "," + num(e.val_f1) + "\n";
    std::printf("%-8s best val %.4f  test %.4f\n", to_string(c.strategy).c_str(), c.history.best_val_f1, c.history.test_f1);
  }
  write_out(common.out, "curves.csv", csv);
  return 0;
}

int cmd_refresh_sweep(const Common& common, const DataOpts& data, const RunOverrides& ov, const std::string& values) {
  TrainRun run = ov.resolve(common);
  const auto ds = load_dataset(data, run.seed);
  std::vector<std::size_t> ks;
  for (const auto& s : split_list(values)) ks.push_back(std::stoul(s));
  std::string csv = "k,epoch,val_accuracy\n";
  json summary = json::array();
  for (const auto& c : refresh_sweep(ds.graph, ds.split, run, ks)) {
    for (const auto& e : c.history.epochs) csv += std::to_string(c.refresh_interval) + "," + std::to_string(e.epoch) + "," + num(e.val_f1) + "\n";
    summary.push_back({{"k", c.refresh_interval},
                       {"best_val_f1", c.history.best_val_f1},
                       {"refreshes", c.history.refreshes},
                       {"batches", c.history.batches}});
    std::printf("k=%-4zu best val %.4f  refreshes %zu  refresh time per batch %.3es\n", c.refresh_interval,
                c.history.best_val_f1, c.history.refreshes,
                c.history.refresh_seconds / static_cast<double>(std::max<std::size_t>(1, c.history.batches)));
  }
  write_out(common.out, "refresh.csv", csv);
  write_out(common.out, "refresh.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_synth(const Common& common, const std::string& kind, std::size_t n) {
  const auto sg = synth_graph(parse_synth_kind(kind), n, common.seed_or(kDefaultSeed));
  const fs::path out(common.out);
  fs::create_directories(out);
  GraphManifest m;
  m.d_node = sg.graph.d_node();
  m.d_link = sg.graph.d_link();
  m.n_labels = sg.graph.n_labels();
  m.undirected = sg.graph.undirected();
  save_graph(sg.graph, out / "nodes.tsv", out / "links.tsv", out / "manifest.json");
  write_out(out, "split.json", split_to_json(sg.split).dump(2) + "\n");
  std::printf("%s graph: %zu nodes, %zu links\n", kind.c_str(), sg.graph.num_nodes(), sg.graph.num_links());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lase: graph learning with link attributes"};
  app.require_subcommand(1, 1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "random seed");
  };

  DataOpts data;
  RunOverrides ov;
  std::string checkpoint, set = "test", nodes2, links2, values, strategies;
  std::size_t hops = 2, trials = 50, hidden = 4, depth = 1, neighborhoods = 20, max_degree = 10, draws = 100000;
  std::size_t gram_random = 0, n = 1000, fig_trials = 100, fig_hidden = 8;
  double decay = 0.5;
  std::string kind = "interaction";

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd);
  data.attach(train_cmd);
  ov.attach(train_cmd, true);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd);
  data.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint base path (without .json)")->required();
  eval_cmd->add_option("--set", set, "node set")->check(CLI::IsMember({"train", "val", "test", "all"}));

  auto* kernel_cmd = app.add_subcommand("kernel", "random-walk kernel between two graphs");
  add_common(kernel_cmd);
  data.attach(kernel_cmd);
  kernel_cmd->add_option("--nodes2", nodes2, "second graph node file");
  kernel_cmd->add_option("--links2", links2, "second graph link file");
  kernel_cmd->add_option("--hops", hops, "walk hops (walks visit hops+1 nodes)");
  kernel_cmd->add_option("--decay", decay, "decay in (0,1)");
  kernel_cmd->add_option("--gram-random", gram_random, "emit the Gram matrix of this many random small graphs");

  auto* thm_cmd = app.add_subcommand("check-theorem1", "network node-sum vs walk kernel");
  add_common(thm_cmd);
  data.attach(thm_cmd);
  thm_cmd->add_option("--hops", hops, "network depth and walk hops");
  thm_cmd->add_option("--decay", decay, "constant decay");
  thm_cmd->add_option("--trials", trials, "random parameter draws");
  thm_cmd->add_option("--hidden", hidden, "hidden width (every coordinate is checked)");

  auto* fig_cmd = app.add_subcommand("figure3-check", "mirrored neighbourhoods: concat vs rw/sage");
  add_common(fig_cmd);
  fig_cmd->add_option("--trials", fig_trials, "random parameter draws");
  fig_cmd->add_option("--depth", depth, "stack depth");
  fig_cmd->add_option("--hidden", fig_hidden, "hidden width");

  auto* var_cmd = app.add_subcommand("sample-variance", "estimator bias and variance per strategy");
  add_common(var_cmd);
  var_cmd->add_option("--neighborhoods", neighborhoods, "random neighbourhoods");
  var_cmd->add_option("--max-degree", max_degree, "largest degree");
  var_cmd->add_option("--draws", draws, "single-draw estimates per strategy");

  auto* snr_cmd = app.add_subcommand("snr-sweep", "accuracy under link-attribute noise");
  add_common(snr_cmd);
  data.attach(snr_cmd);
  ov.attach(snr_cmd, false);
  snr_cmd->add_option("--snr-values", values, "comma-separated list")->default_val("inf,4,2,1,0.5");

  auto* strat_cmd = app.add_subcommand("strategy-compare", "validation curves per sampling strategy");
  add_common(strat_cmd);
  data.attach(strat_cmd);
  ov.attach(strat_cmd, false);
  strat_cmd->add_option("--strategies", strategies, "comma-separated list")->default_val("full,uniform,gate,minvar");

  auto* refresh_cmd = app.add_subcommand("refresh-sweep", "validation curves per refresh interval");
  add_common(refresh_cmd);
  data.attach(refresh_cmd);
  ov.attach(refresh_cmd, false);
  refresh_cmd->add_option("--refresh-values", values, "comma-separated list")->default_val("1,8,64");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic graph");
  add_common(synth_cmd);
  synth_cmd->add_option("--kind", kind, "graph kind")->check(CLI::IsMember({"interaction", "concat-blind", "random"}));
  synth_cmd->add_option("--n", n, "node count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(common, data, ov);
    if (*eval_cmd) return cmd_eval(common, data, checkpoint, set);
    if (*kernel_cmd) return cmd_kernel(common, data, nodes2, links2, hops, decay, gram_random);
    if (*thm_cmd) return cmd_theorem1(common, data, hops, decay, trials, hidden);
    if (*fig_cmd) return cmd_figure3(common, fig_trials, depth, fig_hidden);
    if (*var_cmd) return cmd_sample_variance(common, neighborhoods, max_degree, draws);
    if (*snr_cmd) return cmd_snr_sweep(common, data, ov, values);
    if (*strat_cmd) return cmd_strategy_compare(common, data, ov, strategies);
    if (*refresh_cmd) return cmd_refresh_sweep(common, data, ov, values);
    if (*synth_cmd) return cmd_synth(common, kind, n);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const CheckFailed& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
