#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "torper/torus_integral.hpp"

namespace torper::cli {

// Flag values given on the command line; unset fields keep scenario defaults.
struct Overrides {
    std::optional<std::int64_t> p;
    std::optional<std::string> ext;
    std::optional<int> cpi;
    std::optional<std::size_t> theta_index;
    std::optional<int> eta_level;
    std::optional<std::size_t> eta_index;
    std::optional<int> omega_level;
    std::optional<std::size_t> omega_index;
    std::optional<int> d;
    std::optional<std::int64_t> xi;
    std::optional<std::string> torus;
    std::optional<std::int64_t> torus_xi;
    std::optional<std::string> rep;
    std::optional<int> shell;
    std::optional<std::int64_t> a, b;
    std::optional<double> angle;
    std::optional<int> n_max;
    std::optional<int> shells;
    std::optional<std::string> expect;
    std::optional<std::string> sweep_kind;
    Backend backend = Backend::exact;
    int precision = 8;
};

struct RunReport {
    std::string scenario;
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json value_exact;  // null, "a/b", or {modulus, terms}
    std::optional<std::complex<double>> value_float;
    std::string expected;
    std::string verdict;  // pass, fail, skipped(reason)
    std::string anchor;
    double seconds = 0.0;
    nlohmann::json details = nlohmann::json::object();

    bool failed() const { return verdict == "fail"; }
};

nlohmann::json to_json(const RunReport& r, bool timing = true);
std::string csv_header();
std::string to_csv(const RunReport& r, bool timing = true);

// stable order: scenario id, then the dumped params
void sort_reports(std::vector<RunReport>& reports);

struct Scenario {
    std::string id;
    std::string anchor;
    std::string summary;
    std::function<std::vector<RunReport>(const Overrides&, unsigned jobs)> run;
};

const std::vector<Scenario>& registry();
const Scenario& find_scenario(const std::string& id);
bool glob_match(const std::string& pattern, const std::string& text);

// runs matching scenarios on a pool of `jobs` workers, merged in sorted order
std::vector<RunReport> run_all(const std::string& filter, const Overrides& o, unsigned jobs);

// ---------------------------------------------------------------- builders shared with the subcommands

LocalFieldParams field_params(std::int64_t p, const std::string& kind, std::int64_t xi, int precision);
// theta of the requested c(pi): inert c(pi) = 2 c(theta), ramified c(pi) = c(theta) + 1
ScDatum supercuspidal(const LocalFieldParams& prm, int c_pi, std::size_t theta_index);
// pi(1, mu) with mu(-1) = 1 of level n, by position among those
PsDatum principal_series(std::int64_t p, int n, std::size_t index);
// level 0 is the trivial character
TorusCharacter torus_character(const LocalFieldParams& prm, int level, std::size_t index);
// level-1 eta with eta(-1) C_1 = sign
MultChar eta_with_sign(const ScDatum& sc, int sign);

nlohmann::json exact_json(const IntegralReport& r);
nlohmann::json exact_json(const CycValue& v);
std::string rational_string(const mpq_class& q);
mpq_class parse_rational(const std::string& s);

}  // namespace torper::cli
