#include "aggbuf/cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aggbuf/analysis/bounds.hpp"
#include "aggbuf/common/error.hpp"
#include "aggbuf/eval/report.hpp"
#include "aggbuf/graph/sbm.hpp"
#include "aggbuf/tensor/kernels.hpp"
#include "aggbuf/training/pipeline.hpp"
#include "aggbuf/training/sweep.hpp"

namespace aggbuf::cli {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string out = "out";
  std::uint64_t seed = 0;
  std::string data;
  std::size_t split = 0;
  std::string sbm = "n=1000,classes=4";

  std::string arch = "gcn";
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t gin_hidden = 64;
  std::string activation = "relu";
  std::string norm = "sym";
  bool self_loops = true;

  double lr = 1e-2;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  double pretrain_drop_edge = 0.0;
  std::size_t epochs = 2000;
  std::size_t patience = 100;

  std::string base;
  std::string variant = "full";
  double lambda = 1.0;
  double drop_edge = 0.5;
  double tune_lr = 1e-2;
  double tune_weight_decay = 0.0;
  double tune_dropout = 0.0;
  std::string objective = "rc";
  bool stop_gradient = false;

  std::string model;
  std::vector<double> removal;
  std::size_t removal_seeds = 5;

  std::size_t trials = 1000;
  std::size_t graph_nodes = 32;
  double graph_density = 0.15;
  std::size_t layer = 1;

  std::vector<double> lambdas{1.0, 0.5, 0.1};
  std::vector<double> drop_edges{0.2, 0.5, 0.7, 1.0};
  std::vector<double> dropouts{0.0, 0.2, 0.5, 0.7};
  std::size_t runs = 5;
};

void add_options(CLI::App& app, RunConfig& c) {
  app.add_option("--out", c.out, "Output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app.add_option("--data", c.data, "Dataset directory");
  app.add_option("--split", c.split, "Split index")->capture_default_str();
  app.add_option("--sbm", c.sbm, "SBM spec: n,classes,p_in,p_out,dim,mu,sigma as key=value list")->capture_default_str();

  app.add_option("--arch", c.arch, "mlp|gcn|sgc|sage|gin")->capture_default_str();
  app.add_option("--layers", c.layers, "Layer count (SGC: propagation steps)")->capture_default_str();
  app.add_option("--hidden", c.hidden, "Hidden width")->capture_default_str();
  app.add_option("--gin-hidden", c.gin_hidden, "GIN inner MLP width")->capture_default_str();
  app.add_option("--activation", c.activation, "relu|sigmoid|gelu|tanh|elu")->capture_default_str();
  app.add_option("--norm", c.norm, "regular|rw|sym")->capture_default_str();
  app.add_option("--self-loops", c.self_loops, "Add self-loops before normalizing")->capture_default_str();

  app.add_option("--lr", c.lr, "Pretraining learning rate")->capture_default_str();
  app.add_option("--weight-decay", c.weight_decay, "Pretraining L2 weight decay")->capture_default_str();
  app.add_option("--dropout", c.dropout, "Pretraining dropout")->capture_default_str();
  app.add_option("--pretrain-drop-edge", c.pretrain_drop_edge, "DropEdge rate while pretraining (baseline)")
      ->capture_default_str();
  app.add_option("--epochs", c.epochs, "Max epochs")->capture_default_str();
  app.add_option("--patience", c.patience, "Early-stopping patience")->capture_default_str();

  app.add_option("--base", c.base, "Base model checkpoint");
  app.add_option("--variant", c.variant, "full|single|jknet|residual|agg")->capture_default_str();
  app.add_option("--lambda", c.lambda, "Robustness weight")->capture_default_str();
  app.add_option("--drop-edge", c.drop_edge, "DropEdge rate while tuning the buffer")->capture_default_str();
  app.add_option("--tune-lr", c.tune_lr, "Buffer learning rate")->capture_default_str();
  app.add_option("--tune-weight-decay", c.tune_weight_decay, "Buffer weight decay")->capture_default_str();
  app.add_option("--tune-dropout", c.tune_dropout, "Dropout on buffer inputs")->capture_default_str();
  app.add_option("--objective", c.objective, "rc|rc_train|ce|pseudo|distill")->capture_default_str();
  app.add_option("--stop-gradient", c.stop_gradient, "Detach the clean branch of the robustness term")
      ->capture_default_str();

  app.add_option("--model", c.model, "Model or buffer checkpoint to evaluate/analyze");
  app.add_option("--removal", c.removal, "Kept-edge ratios for the removal sweep")->delimiter(',');
  app.add_option("--removal-seeds", c.removal_seeds, "Masks per removal ratio")->capture_default_str();

  app.add_option("--trials", c.trials, "Monte-Carlo trials")->capture_default_str();
  app.add_option("--graph-nodes", c.graph_nodes, "Random graph size for analysis")->capture_default_str();
  app.add_option("--graph-density", c.graph_density, "Random graph edge probability")->capture_default_str();
  app.add_option("--layer", c.layer, "Layer checked by the bound")->capture_default_str();

  app.add_option("--lambdas", c.lambdas, "Sweep values for lambda")->delimiter(',')->capture_default_str();
  app.add_option("--drop-edges", c.drop_edges, "Sweep values for the DropEdge rate")->delimiter(',')->capture_default_str();
  app.add_option("--dropouts", c.dropouts, "Sweep values for buffer dropout")->delimiter(',')->capture_default_str();
  app.add_option("--runs", c.runs, "Seeds per sweep point")->capture_default_str();
}

SbmConfig parse_sbm(const std::string& spec, std::uint64_t seed) {
  SbmConfig s;
  s.seed = seed;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--sbm: expected key=value, got '" + item + "'");
    const std::string k = item.substr(0, eq), v = item.substr(eq + 1);
    try {
      if (k == "n") s.n = std::stoul(v);
      else if (k == "classes") s.classes = std::stoul(v);
      else if (k == "p_in") s.p_in = std::stod(v);
      else if (k == "p_out") s.p_out = std::stod(v);
      else if (k == "dim") s.feature_dim = std::stoul(v);
      else if (k == "mu") s.mu = std::stod(v);
      else if (k == "sigma") s.sigma = std::stod(v);
      else throw ConfigError("--sbm: unknown key '" + k + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("--sbm: bad value for '" + k + "'");
    }
  }
  s.validate();
  return s;
}

DatasetBundle load_data(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("--data is required");
  if (!fs::is_directory(c.data)) throw ConfigError("dataset directory '" + c.data + "' does not exist");
  return load_dataset(c.data);
}

ModelConfig model_config(const RunConfig& c, const DatasetBundle& d) {
  ModelConfig m = make_config(arch_from_string(c.arch), d.features.cols(), c.hidden, d.num_classes, c.layers);
  m.activation = activation_from_string(c.activation);
  m.norm = {norm_kind_from_string(c.norm), c.self_loops};
  m.gin_hidden = c.gin_hidden;
  m.dropout = c.dropout;
  m.validate();
  return m;
}

TrainConfig pretrain_config(const RunConfig& c) {
  TrainConfig t;
  t.lr = c.lr;
  t.weight_decay = c.weight_decay;
  t.max_epochs = c.epochs;
  t.patience = c.patience;
  t.seed = c.seed;
  t.drop_edge = c.pretrain_drop_edge;
  t.dropout = c.dropout;
  t.validate();
  return t;
}

TrainConfig tune_config(const RunConfig& c) {
  TrainConfig t;
  t.lr = c.tune_lr;
  t.weight_decay = c.tune_weight_decay;
  t.max_epochs = c.epochs;
  t.patience = c.patience;
  t.seed = c.seed;
  t.drop_edge = c.drop_edge;
  t.lambda = c.lambda;
  t.dropout = c.tune_dropout;
  t.objective = objective_from_string(c.objective);
  t.stop_gradient_clean = c.stop_gradient;
  t.validate();
  return t;
}

ModelParams load_base(const std::string& path) {
  if (path.empty()) throw ConfigError("--base is required");
  if (!fs::is_regular_file(path)) throw ConfigError("base checkpoint '" + path + "' does not exist");
  return load_model(path);
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

int cmd_generate(const RunConfig& c, std::ostream& out) {
  const DatasetBundle d = generate_sbm(parse_sbm(c.sbm, c.seed));
  save_dataset(d, c.out);
  out << "wrote " << c.out << ": " << d.graph.num_nodes() << " nodes, " << d.graph.num_edges() << " edges, "
      << d.num_classes << " classes\n";
  return kExitOk;
}

int cmd_pretrain(const RunConfig& c, std::ostream& out) {
  const DatasetBundle d = load_data(c);
  const Split& split = d.split(c.split);
  const ModelConfig mc = model_config(c, d);
  const PretrainResult r = pretrain(mc, pretrain_config(c), d, split);
  const fs::path dir = c.out;
  save_model(r.params, dir / "model.ckpt");
  r.history.write_jsonl(dir / "history.jsonl");
  r.history.write_csv(dir / "history.csv");
  const Propagation prop = make_propagation(d.graph, mc);
  const double test = accuracy(predict(r.params, d.features, prop), d.labels, split.test);
  write_json_file({{"best_epoch", r.history.best_epoch}, {"val_acc", r.history.best_val}, {"test_acc", test}},
                  dir / "summary.json");
  out << "pretrain: best epoch " << r.history.best_epoch << ", val " << r.history.best_val << ", test " << test << '\n';
  return kExitOk;
}

int cmd_tune(const RunConfig& c, std::ostream& out) {
  const DatasetBundle d = load_data(c);
  const Split& split = d.split(c.split);
  const ModelParams base = load_base(c.base);
  const TuneResult r = tune_buffer(attach(base, buffer_variant_from_string(c.variant)), tune_config(c), d, split);
  const fs::path dir = c.out;
  save_buffer(r.model, dir / "buffer.ckpt", fs::absolute(c.base).string());
  r.history.write_jsonl(dir / "history.jsonl");
  r.history.write_csv(dir / "history.csv");
  const Propagation prop = make_propagation(d.graph, base.config);
  const double test = accuracy(buffered_predict(r.model, d.features, prop), d.labels, split.test);
  write_json_file({{"best_epoch", r.history.best_epoch},
                   {"val_acc", r.history.best_val},
                   {"test_acc", test},
                   {"base_hash", r.base_hash}},
                  dir / "summary.json");
  out << "tune: best epoch " << r.history.best_epoch << ", val " << r.history.best_val << ", test " << test << '\n';
  return kExitOk;
}

// Predictor for either checkpoint kind; `tag` names it in reports. The
// features are captured by reference and must outlive the predictor.
Predictor load_predictor(const RunConfig& c, const Matrix& x, std::string& tag) {
  if (c.model.empty()) throw ConfigError("--model is required");
  if (!fs::is_regular_file(c.model)) throw ConfigError("checkpoint '" + c.model + "' does not exist");
  const std::string kind = read_container(c.model).header.value("kind", "");
  if (kind == "model") {
    auto params = std::make_shared<ModelParams>(load_model(c.model));
    tag = to_string(params->config.arch);
    return [params, &x](const Graph& g) {
      return predict(*params, x, make_propagation(g, params->config, IsolatedPolicy::ZeroRow));
    };
  }
  if (kind == "buffer") {
    const std::string base_path = c.base.empty() ? buffer_base_path(c.model) : c.base;
    auto bm = std::make_shared<BufferedModel>(load_buffer(c.model, load_base(base_path)));
    tag = std::string(to_string(bm->base.config.arch)) + "_b";
    return [bm, &x](const Graph& g) {
      return buffered_predict(*bm, x, make_propagation(g, bm->base.config, IsolatedPolicy::ZeroRow));
    };
  }
  throw ConfigError("'" + c.model + "' is neither a model nor a buffer checkpoint");
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  const DatasetBundle d = load_data(c);
  const Split& split = d.split(c.split);
  std::string tag;
  const Predictor pred = load_predictor(c, d.features, tag);
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < c.removal_seeds; ++k) seeds.push_back(derive_seed(c.seed, {100, k}));
  const MetricsReport rep = evaluate(pred, d, split, c.removal, seeds, tag, c.seed);
  emit_report(std::span<const MetricsReport>(&rep, 1), fs::path(c.out) / "report.json");
  out << std::fixed << std::setprecision(4) << tag << ": overall " << rep.overall << ", head " << rep.head
      << ", tail " << rep.tail << ", homophilous " << rep.homophilous << ", heterophilous " << rep.heterophilous
      << '\n';
  for (const auto& p : rep.removal) out << "  keep " << p.ratio << ": " << p.mean << " +- " << p.std << '\n';
  return kExitOk;
}

int cmd_analyze(const RunConfig& c, std::ostream& out) {
  ModelParams params;
  if (!c.model.empty()) {
    if (!fs::is_regular_file(c.model)) throw ConfigError("checkpoint '" + c.model + "' does not exist");
    params = load_model(c.model);
  } else {
    ModelConfig mc = make_config(arch_from_string(c.arch), c.hidden, c.hidden, c.hidden, c.layers);
    mc.activation = activation_from_string(c.activation);
    mc.norm = {norm_kind_from_string(c.norm), c.self_loops};
    mc.gin_hidden = c.gin_hidden;
    params = init_params(mc, derive_seed(c.seed, {0}));
  }
  SbmConfig gs;
  gs.n = c.graph_nodes;
  gs.classes = 1;
  gs.p_in = c.graph_density;
  gs.p_out = 0.0;
  gs.feature_dim = 1;
  gs.num_splits = 0;
  gs.seed = derive_seed(c.seed, {1});
  const Graph g = generate_sbm(gs).graph;
  Rng rng = make_rng(c.seed, {2});

  nlohmann::json doc;
  nlohmann::json bound = nullptr;
  if (params.config.arch != Arch::SGC) {
    const BoundReport b = verify_bound(params, c.layer, g, c.drop_edge, c.trials, rng);
    bound = to_json(b);
    out << "bound     " << b.arch << '/' << b.scheme << " layer " << b.layer << ": " << b.violations << '/'
        << b.trials << " violations, max ratio " << b.max_ratio << '\n';
  }
  doc["bound"] = bound;
  try {
    const Witness w = find_discrepancy_witness(params, g, rng);
    doc["witness"] = {{"found", true},
                      {"attempt", w.attempt},
                      {"input_discrepancy", w.input_discrepancy},
                      {"output_discrepancy", w.output_discrepancy},
                      {"edges_removed", w.edges_removed}};
    out << "witness   found at attempt " << w.attempt << ", output discrepancy " << w.output_discrepancy << '\n';
  } catch (const SearchExhaustedError& e) {
    doc["witness"] = {{"found", false}, {"reason", e.what()}};
    out << "witness   none (" << e.what() << ")\n";
  }
  nlohmann::json conds = nlohmann::json::array();
  for (auto v : {BufferVariant::Full, BufferVariant::SingleLayer, BufferVariant::JKNetStyle,
                 BufferVariant::ResidualStyle, BufferVariant::PlainAgg}) {
    const ConditionReport r = check_buffer_conditions(v, c.trials, rng);
    conds.push_back(to_json(r));
    out << "buffer    " << std::setw(8) << std::left << to_string(v) << std::right << " C1 " << r.c1_pass << '/'
        << r.trials << "  C2 " << r.c2_pass << '/' << r.trials << '\n';
  }
  doc["buffer_conditions"] = conds;
  write_json_file(doc, fs::path(c.out) / "analysis.json");
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const DatasetBundle d = load_data(c);
  const Split& split = d.split(c.split);
  const ModelParams base = load_base(c.base);
  const BufferVariant variant = buffer_variant_from_string(c.variant);
  const TrainConfig proto = tune_config(c);
  const std::vector<SweepAxis> axes{{"lambda", c.lambdas}, {"drop_edge", c.drop_edges}, {"dropout", c.dropouts}};
  const Evaluator eval = [&](const SweepPoint& p, std::uint64_t seed) {
    TrainConfig tc = proto;
    tc.lambda = p.at("lambda");
    tc.drop_edge = p.at("drop_edge");
    tc.dropout = p.at("dropout");
    tc.seed = seed;
    return tune_buffer(attach(base, variant), tc, d, split).history.best_val;
  };
  const auto ranked = grid_sweep(axes, eval, c.seed, c.runs);
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    nlohmann::json point = nlohmann::json::object();
    for (const auto& [k, v] : ranked[r].point.values) point[k] = v;
    doc.push_back({{"rank", r}, {"index", ranked[r].index}, {"point", point}, {"scores", ranked[r].scores},
                   {"mean_val_acc", ranked[r].mean}});
  }
  write_json_file(doc, fs::path(c.out) / "sweep.json");
  for (std::size_t r = 0; r < std::min<std::size_t>(ranked.size(), 5); ++r)
    out << r + 1 << ". " << ranked[r].point.key() << "  val " << ranked[r].mean << '\n';
  return kExitOk;
}

void apply_thread_cap(std::ostream& err) {
  const char* env = std::getenv("GB_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 0) {
    err << "ignoring GB_THREADS='" << env << "'\n";
    return;
  }
  kernels::set_max_threads(static_cast<int>(n));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  apply_thread_cap(err);
  CLI::App app{"Aggregation buffer GNN engine", "aggbuf"};
  RunConfig c;
  add_options(app, c);
  app.set_config("--config", "", "Flat key=value config file; flags override it");
  app.require_subcommand(1);
  const std::pair<const char*, const char*> subs[] = {
      {"generate", "Write a synthetic SBM dataset to --out"},
      {"pretrain", "Train a base model"},
      {"tune", "Attach and tune an aggregation buffer on --base"},
      {"eval", "Accuracy, degree/homophily groups and edge-removal sweep"},
      {"analyze", "Discrepancy bounds, witness search and buffer conditions"},
      {"sweep", "Grid search over buffer hyperparameters"}};
  for (const auto& [name, desc] : subs) app.add_subcommand(name, desc)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << app.help();
    return kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "config.ini", "# aggbuf " + cmd + "\n" + app.config_to_str(true, false));
    if (cmd == "generate") return cmd_generate(c, out);
    if (cmd == "pretrain") return cmd_pretrain(c, out);
    if (cmd == "tune") return cmd_tune(c, out);
    if (cmd == "eval") return cmd_eval(c, out);
    if (cmd == "analyze") return cmd_analyze(c, out);
    if (cmd == "sweep") return cmd_sweep(c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace aggbuf::cli
