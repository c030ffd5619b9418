#pragma once
// Check reports: named quantities, asserted margins, fitted orders and
// hypothesis flags, serialized to JSON or CSV.

#include "rigidity/core.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

namespace rigidity {

using Json = nlohmann::ordered_json;

struct Assertion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=", ">=", ">" or "<"
  bool passed = false;
};

struct OrderFit {
  std::string name;
  std::vector<double> scales;
  std::vector<double> residuals;
  double order = 0.0;
  double fit_residual = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct HypothesisFlag {
  std::string name;
  bool holds = false;
  double min_margin = 0.0;
};

class CheckReport {
 public:
  explicit CheckReport(std::string scenario) : scenario_(std::move(scenario)), start_(std::chrono::steady_clock::now()) {}

  const std::string& scenario() const { return scenario_; }

  void quantity(const std::string& name, double v) { quantities_.emplace_back(name, v); }
  void note(const std::string& s) { notes_.push_back(s); }

  bool assert_le(const std::string& name, double v, double bound) { return add(name, v, bound, "<=", v <= bound); }
  bool assert_ge(const std::string& name, double v, double bound) { return add(name, v, bound, ">=", v >= bound); }
  bool assert_gt(const std::string& name, double v, double bound) { return add(name, v, bound, ">", v > bound); }
  bool assert_lt(const std::string& name, double v, double bound) { return add(name, v, bound, "<", v < bound); }

  bool order(const std::string& name, std::vector<double> scales, std::vector<double> residuals, double threshold) {
    if (scales.size() < 3) throw ConfigError("order fits need at least three scales");
    OrderFit f;
    f.name = name;
    f.scales = std::move(scales);
    f.residuals = std::move(residuals);
    f.threshold = threshold;
    bool zero = true;
    for (double r : f.residuals) zero = zero && r == 0.0;
    if (zero) {
      // Exact to rounding at every scale; the order is vacuous.
      f.order = std::numeric_limits<double>::infinity();
      f.passed = true;
    } else {
      std::vector<double> abs_res(f.residuals.size());
      for (std::size_t i = 0; i < abs_res.size(); ++i) abs_res[i] = std::abs(f.residuals[i]);
      const LogLogFit fit = fit_loglog(f.scales, abs_res);
      f.order = fit.slope;
      f.fit_residual = fit.fit_residual;
      f.passed = f.order >= threshold;
    }
    orders_.push_back(f);
    return f.passed;
  }

  void hypothesis(const std::string& name, double min_margin) {
    hypotheses_.push_back({name, min_margin >= 0.0, min_margin});
  }

  bool passed() const {
    for (const auto& a : assertions_)
      if (!a.passed) return false;
    for (const auto& o : orders_)
      if (!o.passed) return false;
    return true;
  }

  void finish() {
    wall_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  double wall_seconds() const { return wall_; }

  const std::vector<Assertion>& assertions() const { return assertions_; }
  const std::vector<OrderFit>& orders() const { return orders_; }
  const std::vector<HypothesisFlag>& hypotheses() const { return hypotheses_; }
  const std::vector<std::pair<std::string, double>>& quantities() const { return quantities_; }

  double value(const std::string& name) const {
    for (const auto& [k, v] : quantities_)
      if (k == name) return v;
    for (const auto& a : assertions_)
      if (a.name == name) return a.value;
    throw ConfigError("report has no quantity " + name);
  }

  const OrderFit& order_fit(const std::string& name) const {
    for (const auto& o : orders_)
      if (o.name == name) return o;
    throw ConfigError("report has no order fit " + name);
  }

  /// Wall time is left out when include_time is false, so repeated runs compare bit for bit.
  Json to_json(bool include_time = true) const {
    Json j;
    j["scenario"] = scenario_;
    j["passed"] = passed();
    Json q = Json::object();
    for (const auto& [k, v] : quantities_) q[k] = number(v);
    j["quantities"] = q;
    Json as = Json::array();
    for (const auto& a : assertions_)
      as.push_back({{"name", a.name}, {"value", number(a.value)}, {"relation", a.relation},
                    {"threshold", number(a.threshold)}, {"passed", a.passed}});
    j["assertions"] = as;
    Json os = Json::array();
    for (const auto& o : orders_) {
      Json e = {{"name", o.name}, {"order", number(o.order)}, {"fit_residual", number(o.fit_residual)},
                {"threshold", o.threshold}, {"passed", o.passed}};
      e["scales"] = o.scales;
      Json r = Json::array();
      for (double v : o.residuals) r.push_back(number(v));
      e["residuals"] = r;
      os.push_back(e);
    }
    j["orders"] = os;
    Json hs = Json::array();
    for (const auto& h : hypotheses_)
      hs.push_back({{"name", h.name}, {"holds", h.holds}, {"min_margin", number(h.min_margin)}});
    j["hypotheses"] = hs;
    j["notes"] = notes_;
    if (include_time) j["wall_seconds"] = wall_;
    return j;
  }

  /// kind,name,value,threshold,passed rows.
  std::string to_csv(bool include_time = true) const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "scenario,kind,name,value,threshold,passed\n";
    for (const auto& [k, v] : quantities_) os << scenario_ << ",quantity," << k << "," << v << ",,\n";
    for (const auto& a : assertions_)
      os << scenario_ << ",assertion," << a.name << "," << a.value << "," << a.relation << a.threshold << ","
         << (a.passed ? 1 : 0) << "\n";
    for (const auto& o : orders_)
      os << scenario_ << ",order," << o.name << "," << o.order << "," << o.threshold << "," << (o.passed ? 1 : 0)
         << "\n";
    for (const auto& h : hypotheses_)
      os << scenario_ << ",hypothesis," << h.name << "," << h.min_margin << ",0," << (h.holds ? 1 : 0) << "\n";
    os << scenario_ << ",overall,passed," << (passed() ? 1 : 0) << ",,\n";
    if (include_time) os << scenario_ << ",timing,wall_seconds," << wall_ << ",,\n";
    return os.str();
  }

 private:
  static Json number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  }

  bool add(const std::string& name, double v, double bound, const char* rel, bool ok) {
    assertions_.push_back({name, v, bound, rel, ok && std::isfinite(v)});
    return assertions_.back().passed;
  }

  std::string scenario_;
  std::chrono::steady_clock::time_point start_;
  double wall_ = 0.0;
  std::vector<std::pair<std::string, double>> quantities_;
  std::vector<Assertion> assertions_;
  std::vector<OrderFit> orders_;
  std::vector<HypothesisFlag> hypotheses_;
  std::vector<std::string> notes_;
};

}  // namespace rigidity
