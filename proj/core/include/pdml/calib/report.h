#pragma once

#include <string>

#include "pdml/calib/calibration.h"

namespace pdml::calib {

/// Per-seed table: maturity,metric,seed:<s>... with rows pdml_fit_error,
/// model_error and max_error per maturity. Failed seeds print "failed".
void write_metrics_table(const CalibResult& result, const std::string& file);

/// maturity,T2,start,a,b,eta,chosen_seeds,pdml_fit_error,model_error,max_error,underdetermined
void write_parameters(const CalibResult& result, const std::string& file);

/// maturity,strike,market,surrogate,mc,mc_stderr
void write_prices(const CalibResult& result, const std::string& file);

[[nodiscard]] std::string metrics_table(const CalibResult& result);
[[nodiscard]] std::string parameters_table(const CalibResult& result);
[[nodiscard]] std::string prices_table(const CalibResult& result);

}  // namespace pdml::calib
