#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "commands.h"
#include "config.h"
#include "pdml/calib/calibration.h"
#include "pdml/calib/report.h"
#include "pdml/cheyette/caplet_mc.h"
#include "pdml/cheyette/cheyette.h"
#include "pdml/sampling/sampling.h"
#include "pdml/script/parser.h"
#include "pdml/script/validate.h"
#include "pdml/sim/simulator.h"
#include "pdml/surrogate/train.h"
#include "pdml/util/csv.h"
#include "pdml/util/rng.h"

namespace pdml::cli {

namespace fs = std::filesystem;
using StrSet = std::set<std::string, std::less<>>;

namespace {

constexpr const char* kCheyette = "cheyette_caplet";

Config load_with_overrides(const Overrides& o) {
  Config c = o.config.empty() ? Config{} : Config::load(o.config);
  if (!o.output.empty()) c.set("/output", o.output);
  if (o.paths) c.set("/sim/paths", *o.paths);
  if (o.seed) c.set("/sim/seed", *o.seed);
  if (!o.loss.empty()) c.set("/train/loss", o.loss);
  if (o.lambda) c.set("/train/lambda", *o.lambda);
  if (!o.reference.empty()) c.set("/train/reference", o.reference);
  if (!o.robust.empty()) c.set("/calib/robust", o.robust);
  if (!o.seeds.empty()) c.set("/seeds", o.seeds);
  if (o.threads) c.set("/threads", *o.threads);
  return c;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
}

cheyette::CurveSet load_curves(const Config& c) {
  cheyette::CurveSet cs = cheyette::CurveSet::desk_default();
  if (c.has("/curves/discount")) cs.discount = cheyette::Curve::load_csv(c.existing_file("/curves/discount").string());
  if (c.has("/curves/forecast")) cs.forecast = cheyette::Curve::load_csv(c.existing_file("/curves/forecast").string());
  return cs;
}

cheyette::CheyetteParams cheyette_params(const Config& c) {
  cheyette::CheyetteParams p;
  p.kappa = c.get("/cheyette/kappa", p.kappa);
  p.theta = c.get("/cheyette/theta", p.theta);
  p.z0 = c.get("/cheyette/z0", p.z0);
  p.delta = c.get("/cheyette/delta", p.delta);
  p.a = c.get("/cheyette/a", p.a);
  p.b = c.get("/cheyette/b", p.b);
  p.eta = c.get("/cheyette/eta", p.eta);
  return p;
}

bool is_cheyette(const Config& c) {
  const auto m = c.get<std::string>("/model", "");
  if (!m.empty() && m != kCheyette) throw ConfigError("unknown model '" + m + "' (known: " + kCheyette + ")");
  return m == kCheyette;
}

sampling::SampleMode parse_mode(const std::string& s) {
  if (s == "uniform") return sampling::SampleMode::Uniform;
  if (s == "adaptive") return sampling::SampleMode::Adaptive;
  throw ConfigError("sampling mode must be uniform or adaptive, got '" + s + "'");
}

sampling::ParamDomain parse_domain(const Config& c) {
  sampling::ParamDomain d;
  if (!c.has("/domain")) return d;
  const json& arr = c.doc.at("domain");
  if (!arr.is_array()) throw ConfigError("config /domain must be an array");
  for (const auto& e : arr) {
    try {
      d.params.push_back({e.at("name").get<std::string>(), e.at("lo").get<double>(), e.at("hi").get<double>(),
                          parse_mode(e.value("mode", std::string("uniform")))});
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("config /domain: ") + ex.what());
    }
  }
  try {
    d.check();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  return d;
}

sim::TimeGrid make_grid(const Config& c, std::vector<double> required) {
  double max_dt;
  if (c.has("/grid/n_steps")) {
    const auto n = c.get<std::size_t>("/grid/n_steps", 1);
    if (n == 0) throw ConfigError("config /grid/n_steps must be positive");
    max_dt = *std::max_element(required.begin(), required.end()) / static_cast<double>(n);
  } else if (c.has("/grid/steps_per_year")) {
    max_dt = 1.0 / c.get<double>("/grid/steps_per_year", 32.0);
  } else {
    max_dt = c.get<double>("/grid/max_dt", 1.0 / 32.0);
  }
  if (!(max_dt > 0)) throw ConfigError("grid step must be positive");
  return sim::TimeGrid::build(required, max_dt);
}

// A script with its bindings. Domain coordinate j drives script parameter
// target[j] = shift[j] + scale[j] * x_j.
struct Model {
  std::string source_name;
  script::ValidatedScript vs;
  sim::ParamSet params;
  sim::TimeGrid grid = sim::TimeGrid::uniform(1.0, 1);
  sampling::ParamDomain domain;
  std::vector<std::string> target;
  std::vector<double> shift, scale;
};

void bind_params(const Config& c, sim::ParamSet& ps) {
  if (!c.has("/params")) return;
  const json& obj = c.doc.at("params");
  if (!obj.is_object()) throw ConfigError("config /params must be an object");
  for (const auto& [name, v] : obj.items()) {
    if (v.is_number()) {
      ps.set(name, v.get<double>());
    } else if (v.is_array()) {
      std::vector<sim::ParamPiece> pieces;
      for (const auto& p : v) {
        if (!p.is_object() || !p.contains("start") || !p.contains("value")) {
          throw ConfigError("config /params/" + name + ": schedule pieces need start and value");
        }
        pieces.push_back({p.at("start").get<double>(), {p.at("value").get<double>()}, false});
      }
      ps.set_schedule(name, std::move(pieces));
    } else {
      throw ConfigError("config /params/" + name + " must be a number or a schedule");
    }
  }
}

script::ValidatedScript validate_file(const std::string& source, const std::string& name, const StrSet& externals) {
  try {
    return script::validate_or_throw(script::parse_script(source), externals);
  } catch (const script::ScriptError& e) {
    std::cerr << e.render(name) << '\n';
    throw;
  }
}

Model build_model(const Config& c) {
  Model m;
  m.domain = parse_domain(c);
  if (is_cheyette(c)) {
    const auto p = cheyette_params(c);
    const cheyette::CapletSpec spec{c.get("/cheyette/T1", 1.0), c.get("/cheyette/T2", 1.0 + p.delta),
                                    c.get("/cheyette/strike", 0.02), 1.0};
    static const std::map<std::string, std::string> alias{
        {"a", "volaterm"}, {"b", "volbterm"}, {"eta", "volofvar"}, {"k", "khat"}};
    for (const auto& d : m.domain.params) {
      auto it = alias.find(d.name);
      if (it == alias.end()) throw ConfigError("cheyette domain parameters are a, b, eta and k, got '" + d.name + "'");
      m.target.push_back(it->second);
      m.shift.push_back(d.name == "k" ? 1.0 : 0.0);
      m.scale.push_back(d.name == "k" ? spec.delta() : 1.0);
    }
    m.grid = make_grid(c, {spec.T1});
    m.params = cheyette::caplet_bindings(p, spec, load_curves(c), {spec.strike}, m.grid);
    const auto names = cheyette::script_parameters(1);
    m.source_name = kCheyette;
    m.vs = validate_file(cheyette::emit_script(1), m.source_name, StrSet(names.begin(), names.end()));
    return m;
  }
  const fs::path file = c.existing_file("/script");
  m.source_name = file.string();
  bind_params(c, m.params);
  for (const auto& d : m.domain.params) {
    m.target.push_back(d.name);
    m.shift.push_back(0.0);
    m.scale.push_back(1.0);
    if (!m.params.contains(d.name)) m.params.set(d.name, 0.5 * (d.lo + d.hi));
  }
  const auto names = m.params.names();
  m.vs = validate_file(read_text(file), m.source_name, StrSet(names.begin(), names.end()));
  m.grid = make_grid(c, sim::required_times(m.vs, m.params));
  return m;
}

struct Samples {
  Eigen::MatrixXd X;
  sim::SimOutput out;
  std::vector<std::string> diff;
};

sim::SimOutput run_rows(const Model& m, const Eigen::MatrixXd& X, std::size_t n, std::uint64_t seed,
                        const std::vector<std::string>& diff, const Config& c) {
  sim::ParamSet ps = m.params;
  for (std::size_t j = 0; j < m.target.size(); ++j) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = m.shift[j] + m.scale[j] * X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    ps.set_per_path(m.target[j], std::move(v));
  }
  const sim::Simulator s(m.vs, std::move(ps), m.grid, diff);
  sim::SimConfig sc;
  sc.batch_size = n;
  sc.seed = seed;
  sc.compute_dy = c.get("/sim/compute_dy", true) && !diff.empty();
  sc.shard_size = c.get<std::size_t>("/sim/shard_size", 256);
  sc.threads = c.get<std::size_t>("/threads", 0);
  return s.run(sc);
}

void append(sim::SimOutput& a, const sim::SimOutput& b) {
  a.n_paths += b.n_paths;
  a.Y.insert(a.Y.end(), b.Y.begin(), b.Y.end());
  a.DY.insert(a.DY.end(), b.DY.begin(), b.DY.end());
}

Samples simulate_samples(const Model& m, const Config& c) {
  const auto n = c.get<long long>("/sim/paths", 65536);
  if (n <= 0) throw ConfigError("config /sim/paths must be positive");
  const auto seed = c.get<std::uint64_t>("/sim/seed", 1);
  Samples s;
  s.diff = c.get<std::vector<std::string>>("/sim/diff_wrt", m.target);
  const std::size_t total = static_cast<std::size_t>(n);
  if (m.domain.params.empty()) {
    s.out = run_rows(m, s.X, total, seed, s.diff, c);
    return s;
  }
  bool adaptive = false;
  for (const auto& p : m.domain.params) adaptive = adaptive || p.mode == sampling::SampleMode::Adaptive;
  if (!adaptive) {
    s.X = sampling::sample_uniform(m.domain, total, derive_seed(seed, 1));
    s.out = run_rows(m, s.X, total, derive_seed(seed, 2), s.diff, c);
    return s;
  }
  const double frac = c.get("/sim/pilot_fraction", 0.25);
  const auto n_pilot = static_cast<std::size_t>(std::llround(frac * static_cast<double>(total)));
  if (n_pilot == 0 || n_pilot >= total) throw ConfigError("pilot fraction must leave pilot and main samples");
  auto pilot_domain = m.domain;
  for (auto& p : pilot_domain.params) p.mode = sampling::SampleMode::Uniform;
  const Eigen::MatrixXd Xp = sampling::sample_uniform(pilot_domain, n_pilot, derive_seed(seed, 3));
  sim::SimOutput pilot = run_rows(m, Xp, n_pilot, derive_seed(seed, 4), s.diff, c);
  Eigen::VectorXd Yp(static_cast<Eigen::Index>(n_pilot));
  for (std::size_t i = 0; i < n_pilot; ++i) Yp(static_cast<Eigen::Index>(i)) = pilot.y(i, 0);
  std::map<std::string, sampling::AdaptiveDensity> dens;
  const auto bins = c.get<std::size_t>("/sim/n_bins", 20);
  for (const auto& p : m.domain.params) {
    if (p.mode == sampling::SampleMode::Adaptive) dens[p.name] = sampling::fit_adaptive_density(m.domain, Xp, Yp, p.name, bins);
  }
  const std::size_t n_main = total - n_pilot;
  const Eigen::MatrixXd Xm = sampling::sample_adaptive(m.domain, dens, n_main, derive_seed(seed, 5));
  sim::SimOutput main = run_rows(m, Xm, n_main, derive_seed(seed, 6), s.diff, c);
  if (!c.get("/sim/include_pilot", true)) {
    s.X = Xm;
    s.out = std::move(main);
    return s;
  }
  s.X.resize(Xp.rows() + Xm.rows(), Xp.cols());
  s.X << Xp, Xm;
  s.out = std::move(pilot);
  append(s.out, main);
  return s;
}

// inputs..., Y:<payoff>, dY:<payoff>:<input> for inputs with derivatives.
std::string samples_csv(const Model& m, const Samples& s) {
  std::ostringstream os;
  std::vector<std::pair<std::size_t, std::size_t>> dcols;  // (domain j, diff index)
  for (std::size_t j = 0; j < m.target.size(); ++j) {
    auto it = std::find(s.out.diff_names.begin(), s.out.diff_names.end(), m.target[j]);
    if (it != s.out.diff_names.end() && !s.out.DY.empty()) {
      dcols.emplace_back(j, static_cast<std::size_t>(it - s.out.diff_names.begin()));
    }
  }
  bool first = true;
  auto sep = [&] {
    if (!first) os << ',';
    first = false;
  };
  for (const auto& p : m.domain.params) sep(), os << p.name;
  for (const auto& y : s.out.payoff_names) {
    sep(), os << "Y:" << y;
    for (const auto& [j, k] : dcols) sep(), os << "dY:" << y << ':' << m.domain.params[j].name;
  }
  os << '\n';
  for (std::size_t i = 0; i < s.out.n_paths; ++i) {
    first = true;
    for (Eigen::Index j = 0; j < s.X.cols(); ++j) sep(), os << csv::fmt(s.X(static_cast<Eigen::Index>(i), j));
    for (std::size_t q = 0; q < s.out.n_payoffs(); ++q) {
      sep(), os << csv::fmt(s.out.y(i, q));
      for (const auto& [j, k] : dcols) sep(), os << csv::fmt(s.out.dy(i, q, k) * m.scale[j]);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<fs::path> simulate_to(const Config& c, const fs::path& dir) {
  std::vector<fs::path> files;
  if (is_cheyette(c) && !c.has("/domain")) {
    // Strike ladder priced on common paths: reference prices for training.
    const auto strikes = c.get<std::vector<double>>("/cheyette/strikes", {});
    if (strikes.empty()) throw ConfigError("cheyette simulate needs /domain or /cheyette/strikes");
    const auto p = cheyette_params(c);
    cheyette::CapletMcConfig mc;
    mc.n_paths = c.get<std::size_t>("/sim/paths", mc.n_paths);
    if (mc.n_paths == 0) throw ConfigError("config /sim/paths must be positive");
    mc.seed = c.get<std::uint64_t>("/sim/seed", 1);
    mc.steps_per_year = c.get("/grid/steps_per_year", mc.steps_per_year);
    mc.threads = c.get<std::size_t>("/threads", 0);
    const double T1 = c.get("/cheyette/T1", 1.0);
    const auto q = cheyette::caplet_mc(p, {}, T1, c.get("/cheyette/T2", T1 + p.delta), load_curves(c), strikes, mc);
    std::ostringstream os;
    os << "k,price,stderr\n";
    for (const auto& e : q) os << csv::fmt(e.strike) << ',' << csv::fmt(e.price) << ',' << csv::fmt(e.stderr_) << '\n';
    files.push_back(dir / "prices.csv");
    write_text(files.back(), os.str());
    std::cout << "priced " << q.size() << " strikes on " << mc.n_paths << " paths\n";
    return files;
  }
  const Model m = build_model(c);
  const Samples s = simulate_samples(m, c);
  files.push_back(dir / "sim.csv");
  s.out.write_csv(files.back().string());
  files.push_back(dir / "sim.bin");
  s.out.write_binary(files.back().string());
  if (!m.domain.params.empty()) {
    files.push_back(dir / "samples.csv");
    write_text(files.back(), samples_csv(m, s));
  }
  for (std::size_t q = 0; q < s.out.n_payoffs(); ++q) {
    const auto e = s.out.estimate(q);
    std::cout << s.out.payoff_names[q] << " = " << csv::fmt(e.mean) << " +- " << csv::fmt(e.stderr_) << '\n';
  }
  return files;
}

}  // namespace

int cmd_check(const std::string& script_file, const std::vector<std::string>& params) {
  const std::string source = read_text(script_file);
  script::ScriptAST ast;
  try {
    ast = script::parse_script(source);
  } catch (const script::ScriptError& e) {
    std::cerr << e.render(script_file) << '\n';
    return 1;
  }
  StrSet externals(params.begin(), params.end());
  if (params.empty()) externals = script::infer_externals(ast);
  const auto r = script::validate(ast, externals);
  if (!r.ok()) {
    for (const auto& d : r.diagnostics) std::cerr << d.render(script_file) << '\n';
    return 1;
  }
  std::cout << script_file << ": ok";
  if (params.empty() && !externals.empty()) {
    std::cout << " (external parameters:";
    for (const auto& e : externals) std::cout << ' ' << e;
    std::cout << ')';
  }
  std::cout << '\n';
  return 0;
}

int cmd_simulate(const Overrides& o) {
  const Config c = load_with_overrides(o);
  const fs::path dir = c.output_dir();
  const auto files = simulate_to(c, dir);
  write_manifest(c, "simulate", {c.get<std::uint64_t>("/sim/seed", 1)}, files);
  return 0;
}

namespace {

surrogate::LossKind parse_loss(const std::string& s) {
  if (s == "vml") return surrogate::LossKind::VML;
  if (s == "dml") return surrogate::LossKind::DML;
  if (s == "pdml") return surrogate::LossKind::PDML;
  throw ConfigError("loss must be vml, dml or pdml, got '" + s + "'");
}

surrogate::TrainConfig train_config(const Config& c, const std::string& root) {
  surrogate::TrainConfig t;
  t.kind = parse_loss(c.get<std::string>(root + "/loss", "pdml"));
  t.lambda_override = c.get(root + "/lambda", -1.0);
  t.hidden = c.get(root + "/hidden", t.hidden);
  try {
    t.act = graph::parse_activation(c.get<std::string>(root + "/activation", "softplus"));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  t.lr = c.get(root + "/lr", t.lr);
  t.cosine_decay = c.get(root + "/cosine_decay", t.cosine_decay);
  t.batch_size = c.get(root + "/batch_size", t.batch_size);
  t.epochs = c.get(root + "/epochs", t.epochs);
  if (t.batch_size == 0 || t.epochs == 0) throw ConfigError("batch_size and epochs must be positive");
  return t;
}

void write_history(const fs::path& file, const std::vector<double>& h) {
  std::ostringstream os;
  os << "epoch,loss\n";
  for (std::size_t i = 0; i < h.size(); ++i) os << i + 1 << ',' << csv::fmt(h[i]) << '\n';
  write_text(file, os.str());
}

}  // namespace

int cmd_train(const Overrides& o) {
  const Config c = load_with_overrides(o);
  const fs::path dir = c.output_dir();
  std::vector<fs::path> files;
  fs::path samples_file;
  if (c.has("/train/samples")) {
    samples_file = c.existing_file("/train/samples");
  } else {
    files = simulate_to(c, dir);
    samples_file = dir / "samples.csv";
    if (!fs::exists(samples_file)) throw ConfigError("training needs a /domain to sample inputs from");
  }
  const csv::Table tab = csv::read(samples_file.string());
  std::vector<std::string> inputs;
  for (const auto& h : tab.header) {
    if (h.rfind("Y:", 0) == 0) break;
    inputs.push_back(h);
  }
  inputs = c.get("/train/inputs", inputs);
  std::string payoff;
  for (const auto& h : tab.header) {
    if (h.rfind("Y:", 0) == 0) {
      payoff = h.substr(2);
      break;
    }
  }
  payoff = c.get("/train/payoff", payoff);
  if (inputs.empty() || payoff.empty()) throw ConfigError(samples_file.string() + " has no inputs or payoff columns");
  auto has_col = [&](const std::string& n) { return std::find(tab.header.begin(), tab.header.end(), n) != tab.header.end(); };
  if (!has_col("Y:" + payoff)) throw ConfigError("samples have no payoff '" + payoff + "'");

  surrogate::TrainConfig t = train_config(c, "/train");
  const auto n_in = static_cast<int>(inputs.size());
  std::vector<int> need;
  if (t.kind == surrogate::LossKind::DML) {
    for (int j = 0; j < n_in; ++j) need.push_back(j);
  } else if (t.kind == surrogate::LossKind::PDML) {
    const auto named = c.get<std::vector<std::string>>("/train/pdml_inputs", {});
    for (int j = 0; j < n_in; ++j) {
      const bool listed = std::find(named.begin(), named.end(), inputs[static_cast<std::size_t>(j)]) != named.end();
      if (named.empty() ? has_col("dY:" + payoff + ":" + inputs[static_cast<std::size_t>(j)]) : listed) need.push_back(j);
    }
    if (need.empty()) throw ConfigError("pdml loss needs derivative columns; none found in " + samples_file.string());
  }
  const auto n = static_cast<Eigen::Index>(tab.rows.size());
  Eigen::MatrixXd X(n, n_in), Y(n, 1), DY;
  for (int j = 0; j < n_in; ++j) {
    const auto col = tab.numeric(inputs[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = col[static_cast<std::size_t>(i)];
  }
  {
    const auto col = tab.numeric("Y:" + payoff);
    for (Eigen::Index i = 0; i < n; ++i) Y(i, 0) = col[static_cast<std::size_t>(i)];
  }
  if (!need.empty()) {
    DY = Eigen::MatrixXd::Zero(n, n_in);
    for (int j : need) {
      const std::string name = "dY:" + payoff + ":" + inputs[static_cast<std::size_t>(j)];
      if (!has_col(name)) {
        throw ConfigError(std::string(t.kind == surrogate::LossKind::DML ? "dml" : "pdml") + " loss needs column " +
                          name + " in " + samples_file.string());
      }
      const auto col = tab.numeric(name);
      for (Eigen::Index i = 0; i < n; ++i) DY(i, j) = col[static_cast<std::size_t>(i)];
    }
    if (t.kind == surrogate::LossKind::PDML) {
      for (int j : need) t.pdml_pairs.emplace_back(0, j);
    }
  }
  const auto seed = c.get<std::uint64_t>("/train/seed", 1);
  const auto streams = calib::SeedStreams::from(seed);
  t.init_seed = streams.init;
  t.shuffle_seed = streams.shuffle;

  surrogate::Surrogate net;
  try {
    net = surrogate::train(X, Y, DY, t);
  } catch (const surrogate::TrainError& e) {
    files.push_back(dir / "loss_history.csv");
    write_history(files.back(), e.partial().loss_history);
    files.push_back(dir / "surrogate_partial.bin");
    e.partial().save(files.back().string());
    write_manifest(c, "train", {seed}, files);
    throw;
  }
  files.push_back(dir / "surrogate.bin");
  net.save(files.back().string());
  files.push_back(dir / "loss_history.csv");
  write_history(files.back(), net.loss_history);
  std::cout << "trained on " << n << " samples, final loss " << csv::fmt(net.loss_history.back()) << '\n';

  if (c.has("/train/reference")) {
    const csv::Table ref = csv::read(c.existing_file("/train/reference").string());
    const auto m = static_cast<Eigen::Index>(ref.rows.size());
    Eigen::MatrixXd Xr(m, n_in);
    for (int j = 0; j < n_in; ++j) {
      const auto col = ref.numeric(inputs[static_cast<std::size_t>(j)]);
      for (Eigen::Index i = 0; i < m; ++i) Xr(i, j) = col[static_cast<std::size_t>(i)];
    }
    const auto price = ref.numeric("price");
    const Eigen::MatrixXd pred = net.predict(Xr);
    std::ostringstream os;
    for (const auto& in : inputs) os << in << ',';
    os << "reference,surrogate,error\n";
    double se = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (int j = 0; j < n_in; ++j) os << csv::fmt(Xr(i, j)) << ',';
      const double err = pred(i, 0) - price[static_cast<std::size_t>(i)];
      se += err * err;
      os << csv::fmt(price[static_cast<std::size_t>(i)]) << ',' << csv::fmt(pred(i, 0)) << ',' << csv::fmt(err) << '\n';
    }
    files.push_back(dir / "comparison.csv");
    write_text(files.back(), os.str());
    std::cout << "rmse vs reference " << csv::fmt(std::sqrt(se / static_cast<double>(std::max<Eigen::Index>(m, 1))))
              << '\n';
  }
  write_manifest(c, "train", {seed}, files);
  return 0;
}

namespace {

std::vector<calib::CalibTargets> load_targets(const Config& c, double delta) {
  const csv::Table tab = csv::read(c.existing_file("/calib/targets").string());
  const auto mat = tab.numeric("maturity");
  const auto strike = tab.numeric("strike");
  const auto price = tab.numeric("price");
  auto optional = [&](const char* name, double fallback) {
    const bool has = std::find(tab.header.begin(), tab.header.end(), name) != tab.header.end();
    return has ? tab.numeric(name) : std::vector<double>(mat.size(), fallback);
  };
  const auto weight = optional("weight", 1.0);
  const auto t2 = optional("T2", std::nan(""));
  std::map<double, calib::CalibTargets> by;
  for (std::size_t i = 0; i < mat.size(); ++i) {
    auto& t = by[mat[i]];
    t.T1 = mat[i];
    t.T2 = std::isnan(t2[i]) ? mat[i] + delta : t2[i];
    t.quotes.push_back({strike[i], price[i], weight[i]});
  }
  std::vector<calib::CalibTargets> out;
  for (auto& [k, v] : by) out.push_back(std::move(v));
  if (out.empty()) throw ConfigError("targets file has no rows");
  return out;
}

std::pair<double, double> range(const Config& c, const std::string& ptr, std::pair<double, double> fallback) {
  const auto v = c.get<std::vector<double>>(ptr, {fallback.first, fallback.second});
  if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("config " + ptr + " must be [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

}  // namespace

int cmd_calibrate(const Overrides& o) {
  const Config c = load_with_overrides(o);
  if (c.has("/model") && !is_cheyette(c)) throw ConfigError("calibration supports the cheyette_caplet model only");
  const fs::path dir = c.output_dir();
  calib::PipelineConfig pc;
  pc.model = cheyette_params(c);
  pc.curves = load_curves(c);
  std::tie(pc.box.a_lo, pc.box.a_hi) = range(c, "/calib/box/a", {pc.box.a_lo, pc.box.a_hi});
  std::tie(pc.box.b_lo, pc.box.b_hi) = range(c, "/calib/box/b", {pc.box.b_lo, pc.box.b_hi});
  std::tie(pc.box.eta_lo, pc.box.eta_hi) = range(c, "/calib/box/eta", {pc.box.eta_lo, pc.box.eta_hi});
  std::tie(pc.k_lo, pc.k_hi) = range(c, "/calib/k_range", {pc.k_lo, pc.k_hi});
  pc.n_samples = c.get("/calib/n_samples", pc.n_samples);
  pc.adaptive_b = c.get("/calib/adaptive_b", pc.adaptive_b);
  pc.pilot_fraction = c.get("/calib/pilot_fraction", pc.pilot_fraction);
  pc.include_pilot = c.get("/calib/include_pilot", pc.include_pilot);
  pc.n_bins = c.get("/calib/n_bins", pc.n_bins);
  pc.steps_per_year = c.get("/calib/steps_per_year", pc.steps_per_year);
  pc.train = train_config(c, "/calib/train");
  pc.icde.population = c.get("/calib/population", pc.icde.population);
  pc.icde.generations = c.get("/calib/generations", pc.icde.generations);
  pc.reference.n_paths = c.get("/calib/reference_paths", pc.reference.n_paths);
  pc.reference.seed = c.get<std::uint64_t>("/calib/reference_seed", pc.reference.seed);
  pc.reference.steps_per_year = c.get("/calib/reference_steps_per_year", pc.steps_per_year);
  pc.threads = c.get<std::size_t>("/threads", 0);

  const auto seeds = c.seeds();
  calib::RobustConfig rc;
  const auto mode = c.get<std::string>("/calib/robust", "none");
  if (mode == "none") {
    if (seeds.size() != 1) throw ConfigError("several seeds need --robust best-seed or ensemble");
  } else if (mode == "best-seed") {
    rc.mode = calib::RobustMode::BestSeed;
  } else if (mode == "ensemble") {
    rc.mode = calib::RobustMode::Ensemble;
    rc.ensemble_m = c.get<std::size_t>("/calib/ensemble_m", std::min<std::size_t>(3, seeds.size()));
    if (rc.ensemble_m < 1 || rc.ensemble_m > seeds.size()) throw ConfigError("ensemble size must be in [1, #seeds]");
  } else {
    throw ConfigError("robust mode must be none, best-seed or ensemble, got '" + mode + "'");
  }

  const auto targets = load_targets(c, pc.model.delta);
  const calib::CalibResult res = calib::calibrate_bootstrap(targets, pc, seeds, rc);
  std::vector<fs::path> files{dir / "metrics.csv", dir / "parameters.csv", dir / "prices.csv", dir / "trace.csv"};
  calib::write_metrics_table(res, files[0].string());
  calib::write_parameters(res, files[1].string());
  calib::write_prices(res, files[2].string());
  std::ostringstream tr;
  tr << "maturity,generation,objective\n";
  for (const auto& iv : res.intervals) {
    for (std::size_t g = 0; g < iv.trace.size(); ++g) tr << csv::fmt(iv.T1) << ',' << g << ',' << csv::fmt(iv.trace[g]) << '\n';
  }
  write_text(files[3], tr.str());
  write_manifest(c, "calibrate", seeds, files);
  std::cout << calib::parameters_table(res);
  for (const auto& iv : res.intervals) {
    if (iv.underdetermined) std::cout << "warning: T1=" << csv::fmt(iv.T1) << " has fewer targets than parameters\n";
  }
  if (!res.complete) {
    std::cerr << "calibration stopped: " << res.error << '\n';
    return 3;
  }
  return 0;
}

}  // namespace pdml::cli
