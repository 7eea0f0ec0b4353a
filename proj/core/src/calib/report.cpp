#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pdml/calib/report.h"
#include "pdml/util/csv.h"

namespace pdml::calib {

namespace {

void write(const std::string& text, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file);
  out << text;
}

}  // namespace

std::string metrics_table(const CalibResult& result) {
  std::ostringstream os;
  os << "maturity,metric";
  if (!result.intervals.empty()) {
    for (const auto& s : result.intervals.front().per_seed) os << ",seed:" << s.seed;
  }
  os << '\n';
  for (const auto& iv : result.intervals) {
    for (int m = 0; m < 3; ++m) {
      os << csv::fmt(iv.T1) << ',' << (m == 0 ? "pdml_fit_error" : m == 1 ? "model_error" : "max_error");
      for (const auto& s : iv.per_seed) {
        if (!s.ok) {
          os << ",failed";
          continue;
        }
        const double v = m == 0 ? s.metrics.pdml_fit_error : m == 1 ? s.metrics.model_error : s.metrics.max_error();
        os << ',' << csv::fmt(v);
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string parameters_table(const CalibResult& result) {
  std::ostringstream os;
  os << "maturity,T2,start,a,b,eta,chosen_seeds,pdml_fit_error,model_error,max_error,underdetermined\n";
  for (const auto& iv : result.intervals) {
    os << csv::fmt(iv.T1) << ',' << csv::fmt(iv.T2) << ',' << csv::fmt(iv.theta.start) << ','
       << csv::fmt(iv.theta.a) << ',' << csv::fmt(iv.theta.b) << ',' << csv::fmt(iv.theta.eta) << ',';
    for (std::size_t i = 0; i < iv.chosen.size(); ++i) os << (i ? ";" : "") << iv.chosen[i];
    os << ',' << csv::fmt(iv.metrics.pdml_fit_error) << ',' << csv::fmt(iv.metrics.model_error) << ','
       << csv::fmt(iv.metrics.max_error()) << ',' << (iv.underdetermined ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string prices_table(const CalibResult& result) {
  std::ostringstream os;
  os << "maturity,strike,market,surrogate,mc,mc_stderr\n";
  for (const auto& iv : result.intervals) {
    for (std::size_t i = 0; i < iv.strikes.size(); ++i) {
      os << csv::fmt(iv.T1) << ',' << csv::fmt(iv.strikes[i]) << ',' << csv::fmt(iv.market[i]) << ','
         << csv::fmt(iv.surrogate_prices[i]) << ',' << csv::fmt(iv.mc_prices[i]) << ','
         << csv::fmt(iv.mc_stderr[i]) << '\n';
    }
  }
  return os.str();
}

void write_metrics_table(const CalibResult& result, const std::string& file) { write(metrics_table(result), file); }
void write_parameters(const CalibResult& result, const std::string& file) { write(parameters_table(result), file); }
void write_prices(const CalibResult& result, const std::string& file) { write(prices_table(result), file); }

}  // namespace pdml::calib
