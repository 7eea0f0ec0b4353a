#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::path(PDML_SCRATCH) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Run pdml(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(PDML_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string data(const std::string& name) { return std::string(PDML_TEST_DATA) + "/" + name; }

std::string heston_config(const fs::path& out, double volofvol, long paths, const std::string& extra = "") {
  std::ostringstream os;
  os << R"({
  "script": ")" << data("heston_call.pdml") << R"(",
  "output": ")" << out.string() << R"(",
  "params": {"shortrate": 0.03, "kappa": 1.5, "longtermvariance": 0.04, "volofvol": )" << volofvol << R"(,
             "rho": -0.5, "initiallogspot": 4.605170185988092, "initialvariance": 0.04,
             "maturity": 1.0, "strike": 105.0},
  "grid": {"steps_per_year": 16},
  "sim": {"paths": )" << paths << R"(, "seed": 7, "diff_wrt": ["strike"]})" << extra << "\n}\n";
  return os.str();
}

double ncdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(CliCheck, ValidScriptsAndDiagnostics) {
  const auto d = scratch("check");
  auto r = pdml("check " + data("heston_call.pdml"), d);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(": ok"), std::string::npos);
  EXPECT_NE(r.out.find("volofvol"), std::string::npos);
  r = pdml("check " + data("heston_exotics.pdml"), d);
  EXPECT_EQ(r.code, 0) << r.err;

  const auto typo = write(d / "typo.pdml", "d_x = kapa*d_t\ninit: x = 1\nmaturity: p pays x[t] nodiscount\n");
  r = pdml("check " + typo.string() + " --params kappa,maturity", d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("typo.pdml:1:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("did you mean kappa?"), std::string::npos) << r.err;

  const auto empty = write(d / "empty.pdml", "");
  r = pdml("check " + empty.string(), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("no components"), std::string::npos) << r.err;

  const auto bad = write(d / "bad.pdml", "d_x = (1*d_t\n");
  r = pdml("check " + bad.string(), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.pdml:"), std::string::npos) << r.err;
}

TEST(CliUsage, BadArgumentsExitOne) {
  const auto d = scratch("usage");
  EXPECT_EQ(pdml("", d).code, 1);
  EXPECT_EQ(pdml("frobnicate", d).code, 1);
  EXPECT_EQ(pdml("simulate", d).code, 1);
  const auto cfg = write(d / "c.json", "{ not json");
  EXPECT_EQ(pdml("simulate -c " + cfg.string(), d).code, 1);
  const auto r = pdml("--version", d);
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
}

TEST(CliSimulate, HestonZeroVolOfVolMatchesBlackScholes) {
  const auto d = scratch("sim_bs");
  const auto cfg = write(d / "c.json", heston_config(d / "out", 0.0, 1 << 18));
  const auto r = pdml("simulate -c " + cfg.string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  double mean = 0, se = 0;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "calloption = %lf +- %lf", &mean, &se), 2) << r.out;
  const double d1 = (std::log(100.0 / 105.0) + 0.03 + 0.02) / 0.2, d2 = d1 - 0.2;
  const double bs = 100 * ncdf(d1) - 105 * std::exp(-0.03) * ncdf(d2);
  EXPECT_LT(std::abs(mean - bs), 3 * se) << mean << " vs " << bs;
  EXPECT_TRUE(fs::exists(d / "out" / "sim.bin"));
  EXPECT_TRUE(fs::exists(d / "out" / "sim.csv"));
  EXPECT_TRUE(fs::exists(d / "out" / "manifest.json"));
}

TEST(CliSimulate, RerunsAreByteIdenticalAndZeroPathsRejected) {
  const auto d = scratch("sim_det");
  const std::string dom = R"(,
  "domain": [{"name": "strike", "lo": 90, "hi": 110}])";
  const auto cfg = write(d / "c.json", heston_config(d / "out", 0.4, 2000, dom));
  ASSERT_EQ(pdml("simulate -c " + cfg.string() + " -o " + (d / "a").string(), d).code, 0);
  ASSERT_EQ(pdml("simulate -c " + cfg.string() + " -o " + (d / "b").string() + " --threads 3", d).code, 0);
  for (const char* f : {"sim.bin", "sim.csv", "samples.csv"}) {
    EXPECT_EQ(slurp(d / "a" / f), slurp(d / "b" / f)) << f;
  }
  const auto header = slurp(d / "a" / "samples.csv").substr(0, slurp(d / "a" / "samples.csv").find('\n'));
  EXPECT_EQ(header, "strike,Y:calloption,dY:calloption:strike");
  const auto r = pdml("simulate -c " + cfg.string() + " --paths 0", d);
  EXPECT_EQ(r.code, 1);
}

TEST(CliTrain, LossFlagsAndMissingDerivatives) {
  const auto d = scratch("train");
  const std::string extra = R"(,
  "domain": [{"name": "strike", "lo": 90, "hi": 110}],
  "train": {"hidden": [8, 8], "epochs": 5, "batch_size": 64, "seed": 3})";
  const auto cfg = write(d / "c.json", heston_config(d / "sim", 0.4, 1024, extra));
  ASSERT_EQ(pdml("simulate -c " + cfg.string(), d).code, 0);
  const std::string with_samples = extra.substr(0, extra.size() - 1) + R"(, "samples": ")" +
                                   (d / "sim" / "samples.csv").string() + "\"}";
  const auto tcfg = write(d / "t.json", heston_config(d / "unused", 0.4, 1024, with_samples));
  auto r = pdml("train -c " + tcfg.string() + " --loss vml -o " + (d / "vml").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  r = pdml("train -c " + tcfg.string() + " --loss pdml --lambda 0 -o " + (d / "pdml0").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(d / "vml" / "loss_history.csv"), slurp(d / "pdml0" / "loss_history.csv"));
  r = pdml("train -c " + tcfg.string() + " --loss pdml -o " + (d / "pdml").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(d / "vml" / "loss_history.csv"), slurp(d / "pdml" / "loss_history.csv"));
  EXPECT_TRUE(fs::exists(d / "pdml" / "surrogate.bin"));

  // Samples without derivative columns.
  std::istringstream in(slurp(d / "sim" / "samples.csv"));
  std::ostringstream stripped;
  for (std::string line; std::getline(in, line);) stripped << line.substr(0, line.rfind(',')) << '\n';
  write(d / "nody.csv", stripped.str());
  const std::string no_dy = extra.substr(0, extra.size() - 1) + R"(, "samples": ")" + (d / "nody.csv").string() + "\"}";
  const auto ncfg = write(d / "n.json", heston_config(d / "unused", 0.4, 1024, no_dy));
  r = pdml("train -c " + ncfg.string() + " --loss dml -o " + (d / "dml").string(), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("dY:calloption:strike"), std::string::npos) << r.err;
  EXPECT_EQ(pdml("train -c " + ncfg.string() + " --loss vml -o " + (d / "v2").string(), d).code, 0);
}

TEST(CliTrain, ReferenceComparisonAndDivergence) {
  const auto d = scratch("train_ref");
  auto caplet = [&](const std::string& domain, const std::string& train) {
    return R"({
  "model": "cheyette_caplet",
  "output": ")" + (d / "ref").string() + R"(",
  "cheyette": {"a": -0.15873, "b": 0.00788, "eta": 0.54224, "strikes": [0.01, 0.02, 0.03, 0.04]},
  "grid": {"steps_per_year": 16},
  "sim": {"paths": 16384, "seed": 7},)" + domain + R"(
  "train": )" + train + "\n}\n";
  };
  const std::string domain = R"(
  "domain": [{"name": "k", "lo": 0.01, "hi": 0.04}],)";
  const std::string train = R"({"hidden": [8, 8], "epochs": 10, "batch_size": 64})";
  // Without a domain the caplet model prices the strike ladder.
  auto r = pdml("simulate -c " + write(d / "l.json", caplet("", train)).string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto prices = slurp(d / "ref" / "prices.csv");
  EXPECT_EQ(prices.substr(0, prices.find('\n')), "k,price,stderr");
  const auto cfg = write(d / "c.json", caplet(domain, train));
  r = pdml("train -c " + cfg.string() + " --paths 4096 --reference " + (d / "ref" / "prices.csv").string() + " -o " +
               (d / "net").string(),
           d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rmse vs reference"), std::string::npos);
  const auto cmp = slurp(d / "net" / "comparison.csv");
  EXPECT_EQ(cmp.substr(0, cmp.find('\n')), "k,reference,surrogate,error");
  EXPECT_EQ(std::count(cmp.begin(), cmp.end(), '\n'), 5);

  const auto dcfg = write(d / "d.json", caplet(domain, R"({"hidden": [8], "epochs": 10, "lr": 1e200, "cosine_decay": false})"));
  r = pdml("train -c " + dcfg.string() + " --paths 1024 --loss vml -o " + (d / "div").string(), d);
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(fs::exists(d / "div" / "loss_history.csv"));
  EXPECT_TRUE(fs::exists(d / "div" / "surrogate_partial.bin"));
}

TEST(CliCalibrate, SingleSeedEqualsBestSeedOfOne) {
  const auto d = scratch("calib");
  write(d / "targets.csv", "maturity,strike,price\n1,0.015,0.0021\n1,0.02,0.00125\n1,0.025,0.0007\n");
  std::ostringstream os;
  os << R"({
  "output": ")" << (d / "out").string() << R"(",
  "calib": {"targets": ")" << (d / "targets.csv").string() << R"(",
            "n_samples": 2048, "n_bins": 10, "steps_per_year": 8,
            "train": {"hidden": [16, 16], "epochs": 10, "batch_size": 128},
            "population": 12, "generations": 10, "reference_paths": 8192},
  "seeds": [4]
})";
  const auto cfg = write(d / "c.json", os.str());
  auto r = pdml("calibrate -c " + cfg.string() + " -o " + (d / "one").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  r = pdml("calibrate -c " + cfg.string() + " --robust best-seed --seeds 4 -o " + (d / "best").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"parameters.csv", "metrics.csv", "prices.csv", "trace.csv"}) {
    EXPECT_EQ(slurp(d / "one" / f), slurp(d / "best" / f)) << f;
  }
  const auto params = slurp(d / "one" / "parameters.csv");
  EXPECT_EQ(params.substr(0, params.find('\n')),
            "maturity,T2,start,a,b,eta,chosen_seeds,pdml_fit_error,model_error,max_error,underdetermined");
  const auto metrics = slurp(d / "one" / "metrics.csv");
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "maturity,metric,seed:4");
  EXPECT_NE(slurp(d / "one" / "manifest.json").find("config_hash"), std::string::npos);
  r = pdml("calibrate -c " + cfg.string() + " --seeds 1,2", d);
  EXPECT_EQ(r.code, 1);
  r = pdml("calibrate -c " + cfg.string() + " --robust median", d);
  EXPECT_EQ(r.code, 1);
}
