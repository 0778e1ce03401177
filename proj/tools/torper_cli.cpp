#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "scenarios.hpp"

using namespace torper;
using namespace torper::cli;
using nlohmann::json;

namespace {

struct Output {
    std::string format = "json";
    unsigned jobs = 1;
    bool no_timing = false;
    std::string dir;
};

void add_rep_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--p", o.p, "residue characteristic, a prime >= 5");
    sub->add_option("--ext", o.ext, "field of theta: inert or ramified")->check(CLI::IsMember({"inert", "ramified"}));
    sub->add_option("--cpi", o.cpi, "conductor of pi (the level of mu for principal series)");
    sub->add_option("--theta-index", o.theta_index, "theta (or mu) by enumeration position");
    sub->add_option("--xi", o.xi, "unit xi of the ramified theta field F(sqrt(xi p))");
    sub->add_option("--precision", o.precision, "p-adic working precision")->check(CLI::Range(2, 12));
}

void add_eta_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--eta-level", o.eta_level, "conductor of eta (0 for the untwisted newform)");
    sub->add_option("--eta-index", o.eta_index, "eta by enumeration position within its level");
}

void add_torus_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--torus", o.torus, "field of Omega: inert or ramified")->check(CLI::IsMember({"inert", "ramified"}));
    sub->add_option("--torus-xi", o.torus_xi, "unit xi of a ramified torus field");
    sub->add_option("--omega-level", o.omega_level, "conductor of Omega (0 for trivial)");
    sub->add_option("--omega-index", o.omega_index, "Omega by enumeration position within its level");
}

LocalFieldParams rep_field(const Overrides& o) {
    return field_params(o.p.value_or(5), o.ext.value_or("inert"), o.xi.value_or(1), o.precision);
}

ScDatum rep_sc(const Overrides& o) {
    auto prm = rep_field(o);
    return supercuspidal(prm, o.cpi.value_or(prm.kind == ExtKind::inert ? 4 : 3), o.theta_index.value_or(0));
}

LocalFieldParams torus_field(const Overrides& o) {
    return field_params(o.p.value_or(5), o.torus.value_or("inert"), o.torus_xi.value_or(1), o.precision);
}

TorusCharacter torus_omega(const Overrides& o) {
    return torus_character(torus_field(o), o.omega_level.value_or(0), o.omega_index.value_or(0));
}

MultChar pick_eta(const UnitGroupF& G, const Overrides& o, int fallback_level) {
    const int lvl = o.eta_level.value_or(fallback_level);
    if (lvl < 0 || lvl > G.level()) throw InvalidParameter("eta level out of range");
    auto etas = lvl == 0 ? std::vector<MultChar>{G.trivial()} : G.of_level(lvl);
    const auto idx = o.eta_index.value_or(0);
    if (idx >= etas.size()) throw InvalidParameter("eta index out of range (" + std::to_string(etas.size()) + ")");
    return etas[idx];
}

json rep_params(const ScDatum& sc, const Overrides& o) {
    json j = {{"p", sc.ext.p}, {"ext", to_string(sc.ext.kind)}, {"c_pi", sc.c_pi}, {"theta_index", o.theta_index.value_or(0)}};
    if (sc.ext.kind == ExtKind::ramified) j["xi"] = sc.ext.xi;
    return j;
}

// ---------------------------------------------------------------- subcommands

RunReport cmd_gauss(const Overrides& o) {
    const auto p = o.p.value_or(5);
    const int k = o.eta_level.value_or(2), j = o.shell.value_or(k);
    if (k < 0 || j < 0) throw InvalidParameter("levels must be >= 0");
    UnitGroupF G(p, std::max({k, j, 1}));
    CycField K(static_cast<std::uint64_t>((p - 1) * ipow(p, G.level())));
    auto chi = pick_eta(G, o, k);
    auto g = gauss_sum(K, G, chi, ResidueElem::make(p, -j, 1, o.precision));
    RunReport r;
    r.params = {{"p", p}, {"chi_level", k}, {"chi_index", o.eta_index.value_or(0)}, {"shell", j}};
    r.value_exact = exact_json(g);
    r.value_float = g.to_complex();
    if (k >= 1 && j >= 1) {
        if (j != k) {
            r.expected = "0";
            r.verdict = g.is_zero() ? "pass" : "fail";
        } else {
            mpq_class want(p, (p - 1) * (p - 1) * ipow(p, k - 1));
            want.canonicalize();
            r.expected = "|G|^2 = " + rational_string(want);
            r.verdict = (g * conj(g)).equals_rational(want) ? "pass" : "fail";
        }
    } else {
        r.expected = "none";
        r.verdict = "skipped(law stated for levels >= 1)";
    }
    return r;
}

RunReport cmd_epsilon(const Overrides& o) {
    auto sc = rep_sc(o);
    ScModel<CycField> M(sc, CycField(sc_field_modulus(sc)));
    auto eta = pick_eta(M.group(), o, 0);
    if (!M.in_range(eta))
        throw EpsilonOutOfRange("eta is deeper than the epsilon formula covers", M.group().conductor(eta));
    auto eps = M.epsilon(eta);
    RunReport r;
    r.params = rep_params(sc, o);
    r.params["eta_level"] = M.group().conductor(eta);
    r.params["eta_index"] = o.eta_index.value_or(0);
    r.value_exact = exact_json(eps);
    r.value_float = eps.to_complex();
    r.expected = "|epsilon| = 1";
    r.verdict = (eps * conj(eps)).equals_rational(1) ? "pass" : "fail";
    r.details = {{"C", exact_json(M.C(eta))}, {"n_nu", M.n_nu(eta)}};
    return r;
}

RunReport cmd_mc(const Overrides& o) {
    auto sc = rep_sc(o);
    ScModel<CycField> M(sc, CycField(sc_field_modulus(sc)));
    auto eta = pick_eta(M.group(), o, 0);
    if (2 * M.group().conductor(eta) > sc.c_pi) throw InvalidParameter("eta level above c(pi)/2");
    auto tp = torus_field(o);
    const auto a = o.a.value_or(1), b = o.b.value_or(1);
    const int d = o.d.value_or(sc.c_pi / 2);
    auto pt = torus_point(tp, a, b, d);
    auto closed = mc_torus(M, eta, pt);
    auto oracle = mc_torus(M, eta, pt, McMethod::oracle);
    RunReport r;
    r.params = rep_params(sc, o);
    r.params.update({{"eta_level", M.group().conductor(eta)}, {"eta_index", o.eta_index.value_or(0)},
                     {"torus", to_string(tp.kind)}, {"a", a}, {"b", b}, {"d", d}});
    r.value_exact = exact_json(closed);
    r.value_float = closed.to_complex();
    r.expected = "Kirillov sum " + exact_json(oracle).dump();
    r.verdict = closed == oracle ? "pass" : "fail";
    r.details = {{"i", pt.i == kInfiniteIndex ? json("inf") : json(pt.i)}};
    return r;
}

RunReport cmd_integral(const Overrides& o, unsigned jobs) {
    const bool ps_rep = o.rep.value_or("sc") == "ps";
    Representation rep;
    TorusCharacter om = torus_omega(o);
    json params;
    if (ps_rep) {
        auto ps = principal_series(o.p.value_or(5), o.cpi.value_or(2), o.theta_index.value_or(0));
        om = ps_torus_character(ps, om);
        rep = ps;
        params = {{"p", ps.p}, {"rep", "principal-series"}, {"mu_level", ps.n}, {"mu_index", o.theta_index.value_or(0)}};
    } else {
        auto sc = rep_sc(o);
        rep = sc;
        params = rep_params(sc, o);
    }
    const int c = conductor(rep);
    const int d = o.d.value_or(half_level(rep));
    TestVectorSpec spec = TestVectorSpec::newform(d);
    if (o.eta_level.value_or(0) > 0) {
        if (ps_rep) throw InvalidParameter("twisted newforms are for supercuspidals");
        UnitGroupF G(o.p.value_or(5), std::max(1, c));
        spec = TestVectorSpec::twisted(pick_eta(G, o, 0), d);
        params["eta_level"] = *o.eta_level;
        params["eta_index"] = o.eta_index.value_or(0);
    }
    std::optional<mpq_class> want;
    if (o.expect) want = parse_rational(*o.expect);
    auto res = local_integral(rep, spec, om, o.backend, want, jobs);
    RunReport r;
    r.value_exact = res.exact ? exact_json(res) : json();
    r.value_float = res.value;
    if (want) {
        r.expected = rational_string(*want);
        r.verdict = res.verdict == IntegralReport::Verdict::mismatch ? "fail" : "pass";
    } else {
        r.expected = "none";
        r.verdict = "skipped(no --expect given)";
    }
    params.update({{"d", d}, {"torus", to_string(om.field().kind)}, {"omega_conductor", om.conductor()},
                   {"backend", o.backend == Backend::exact ? "exact" : "float"}});
    if (om.field().kind == ExtKind::ramified) params["torus_xi"] = om.field().xi;
    r.params = params;
    r.details = {{"representation", res.representation}, {"test_vector", res.test_vector}, {"depth", res.depth},
                 {"cosets", res.coset_count}};
    return r;
}

RunReport cmd_sweep(const Overrides& o, unsigned jobs) {
    auto sc = rep_sc(o);
    auto om = torus_omega(o);
    const auto kind = o.sweep_kind.value_or("vanishing");
    RunReport r;
    r.params = rep_params(sc, o);
    r.params.update({{"kind", kind}, {"torus", to_string(om.field().kind)}, {"omega_conductor", om.conductor()}});
    if (om.field().kind == ExtKind::ramified) r.params["torus_xi"] = om.field().xi;
    json specs = json::array();
    if (kind == "vanishing") {
        auto res = vanishing_sweep(sc, om, 0, sc.c_pi, jobs);
        for (const auto& rep : res.reports) specs.push_back({{"spec", rep.test_vector}, {"zero", rep.is_zero}});
        r.value_exact = res.all_vanish ? json("0") : json();
        r.expected = "0 for every d != k";
        r.verdict = res.all_vanish ? "pass" : "fail";
    } else {
        auto res = dichotomy_sweep(sc, om, true, jobs);
        for (const auto& rep : res.reports) specs.push_back({{"spec", rep.test_vector}, {"zero", rep.is_zero}});
        r.value_exact = res.first_nonzero ? exact_json(res.reports[*res.first_nonzero]) : json("0");
        r.expected = res.sign > 0 ? "some pool spec nonzero" : "0 for every pool spec";
        r.verdict = res.consistent ? "pass" : "fail";
        r.details["epsilon"] = res.sign;
    }
    r.details["specs"] = specs;
    return r;
}

RunReport cmd_decay(const Overrides& o, unsigned jobs) {
    Overrides d = o;
    auto rs = find_scenario("decay").run(d, jobs);
    return rs.front();
}

// ---------------------------------------------------------------- output

void emit(std::vector<RunReport> reports, const std::string& command, const Output& out) {
    sort_reports(reports);
    std::size_t pass = 0, fail = 0, skipped = 0;
    for (const auto& r : reports) {
        if (r.verdict == "pass")
            ++pass;
        else if (r.verdict == "fail")
            ++fail;
        else
            ++skipped;
    }
    std::string text;
    if (out.format == "csv") {
        text = csv_header() + "\n";
        for (const auto& r : reports) text += to_csv(r, !out.no_timing) + "\n";
    } else {
        json j;
        j["reports"] = json::array();
        for (const auto& r : reports) j["reports"].push_back(to_json(r, !out.no_timing));
        j["summary"] = {{"pass", pass}, {"fail", fail}, {"skipped", skipped}, {"total", reports.size()}};
        text = j.dump(2) + "\n";
    }
    std::cout << text;
    if (!out.dir.empty()) {
        std::filesystem::create_directories(out.dir);
        auto path = std::filesystem::path(out.dir) / (command + "." + out.format);
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        f << text;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact local torus periods, Gauss sums and matrix coefficients on GL2(Q_p)"};
    app.require_subcommand(1);
    app.fallthrough();

    Output out;
    if (const char* env = std::getenv("TORPER_OUT_DIR")) out.dir = env;
    std::string backend = "exact";
    app.add_option("--out", out.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--jobs", out.jobs, "worker threads")->check(CLI::Range(1u, 256u));
    app.add_option("--output-dir", out.dir, "also write the report here (default $TORPER_OUT_DIR)");
    app.add_flag("--no-timing", out.no_timing, "write seconds as 0 so reports are byte-stable");
    app.add_option("--backend", backend, "value field")->check(CLI::IsMember({"exact", "float"}));

    Overrides o;
    std::string filter;
    bool list = false;

    auto* gauss = app.add_subcommand("gauss", "int_{O^*} psi(p^-j u) chi(u) d*u");
    gauss->add_option("--p", o.p, "residue characteristic");
    gauss->add_option("--eta-level", o.eta_level, "conductor of chi");
    gauss->add_option("--eta-index", o.eta_index, "chi by position within its level");
    gauss->add_option("--shell", o.shell, "j in p^-j (default: the conductor)");
    gauss->add_option("--precision", o.precision, "p-adic working precision")->check(CLI::Range(2, 12));

    auto* epsilon = app.add_subcommand("epsilon", "epsilon(pi x eta, 1/2) of a supercuspidal");
    add_rep_flags(epsilon, o);
    add_eta_flags(epsilon, o);

    auto* mc = app.add_subcommand("mc", "matrix coefficient at a conjugated torus point");
    add_rep_flags(mc, o);
    add_eta_flags(mc, o);
    add_torus_flags(mc, o);
    mc->add_option("--a", o.a, "a in a + b sqrt(D)");
    mc->add_option("--b", o.b, "b in a + b sqrt(D)");
    mc->add_option("--d", o.d, "conjugation by diag(p^d, 1)");

    auto* integral = app.add_subcommand("integral", "the local period I(Phi, Omega)");
    add_rep_flags(integral, o);
    add_eta_flags(integral, o);
    add_torus_flags(integral, o);
    integral->add_option("--rep", o.rep, "sc (supercuspidal) or ps (pi(1, mu))")->check(CLI::IsMember({"sc", "ps"}));
    integral->add_option("--d", o.d, "translate diag(p^d, 1) (default k)");
    integral->add_option("--expect", o.expect, "expected exact value, e.g. 1/6");

    auto* sweep = app.add_subcommand("sweep", "vanishing sweep over d != k, or the full dichotomy pool");
    add_rep_flags(sweep, o);
    add_torus_flags(sweep, o);
    sweep->add_option("--kind", o.sweep_kind, "vanishing or dichotomy")->check(CLI::IsMember({"vanishing", "dichotomy"}));

    auto* decay = app.add_subcommand("decay", "log_q |I| of spherical translates (float)");
    decay->add_option("--p", o.p, "residue characteristic");
    decay->add_option("--angle", o.angle, "Satake angle");
    decay->add_option("--n-max", o.n_max, "largest n")->check(CLI::Range(0, 12));
    decay->add_option("--shells", o.shells, "Whittaker shells")->check(CLI::Range(4, 400));

    auto* verify = app.add_subcommand("verify", "run registered scenarios");
    verify->add_option("--filter", filter, "glob on scenario ids, e.g. 'ps-*'");
    verify->add_flag("--list", list, "list scenario ids and anchors");
    add_rep_flags(verify, o);
    verify->add_option("--angle", o.angle, "Satake angle (decay)");
    verify->add_option("--n-max", o.n_max, "largest n (decay)");
    verify->add_option("--shells", o.shells, "Whittaker shells (decay)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        o.backend = parse_backend(backend);
        std::vector<RunReport> reports;
        std::string command = app.get_subcommands().front()->get_name();
        auto label = [&](RunReport r) {
            r.scenario = command;
            r.anchor = app.get_subcommands().front()->get_description();
            return r;
        };
        auto t0 = std::chrono::steady_clock::now();
        auto stamp = [&](RunReport r) {
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return r;
        };
        if (*gauss) {
            reports.push_back(stamp(label(cmd_gauss(o))));
        } else if (*epsilon) {
            reports.push_back(stamp(label(cmd_epsilon(o))));
        } else if (*mc) {
            reports.push_back(stamp(label(cmd_mc(o))));
        } else if (*integral) {
            reports.push_back(stamp(label(cmd_integral(o, out.jobs))));
        } else if (*sweep) {
            reports.push_back(stamp(label(cmd_sweep(o, out.jobs))));
        } else if (*decay) {
            auto r = cmd_decay(o, out.jobs);
            r.scenario = "decay";
            r.anchor = find_scenario("decay").anchor;
            reports.push_back(r);
        } else if (*verify) {
            if (list) {
                for (const auto& s : registry()) std::cout << s.id << "\t" << s.summary << "\t" << s.anchor << "\n";
                return 0;
            }
            reports = run_all(filter, o, out.jobs);
        }
        emit(reports, command, out);
        for (const auto& r : reports)
            if (r.failed()) return 1;
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return 2;
    } catch (const std::range_error& e) {
        std::cerr << "range error: " << e.what() << "\n";
        return 3;
    } catch (const std::out_of_range& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
