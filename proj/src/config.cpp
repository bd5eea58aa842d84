#include "torstab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace torstab {

namespace {

struct Entry {
    std::vector<std::string> values;
    int line = 0;
    bool used = false;
};

struct ParsedFile {
    std::string origin;
    std::map<std::string, Entry> entries;  // "section.key"

    [[noreturn]] void fail(const std::string& where, int line, const std::string& msg) const {
        std::ostringstream os;
        os << origin << ":" << line << ": " << where << ": " << msg;
        throw config_error(os.str());
    }

    Entry* find(const std::string& key) {
        auto it = entries.find(key);
        if (it == entries.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

ParsedFile tokenize(const std::string& text, const std::string& origin) {
    ParsedFile pf;
    pf.origin = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                pf.fail("section header", lineno, "missing closing ']' in '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) pf.fail("section header", lineno, "empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            pf.fail("entry", lineno, "expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) pf.fail("entry", lineno, "empty key");
        if (section.empty()) pf.fail("entry", lineno, "key '" + key + "' outside any [section]");
        std::string full = section + "." + key;
        if (pf.entries.count(full))
            pf.fail("entry", lineno, "duplicate key '" + full + "' (first at line " +
                                         std::to_string(pf.entries[full].line) + ")");
        Entry e;
        e.line = lineno;
        std::istringstream vs(val);
        std::string tok;
        while (vs >> tok) e.values.push_back(tok);
        if (e.values.empty()) pf.fail("entry", lineno, "key '" + full + "' has no value");
        pf.entries[full] = std::move(e);
    }
    return pf;
}

double to_double(ParsedFile& pf, const Entry& e, const std::string& key, const std::string& tok) {
    try {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        pf.fail(key, e.line, "'" + tok + "' is not a number");
    }
}

long to_long(ParsedFile& pf, const Entry& e, const std::string& key, const std::string& tok) {
    try {
        size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        pf.fail(key, e.line, "'" + tok + "' is not an integer");
    }
}

struct Reader {
    ParsedFile& pf;

    bool has(const std::string& key) { return pf.entries.count(key) > 0; }

    const Entry* scalar_entry(const std::string& key) {
        Entry* e = pf.find(key);
        if (!e) return nullptr;
        if (e->values.size() != 1)
            pf.fail(key, e->line, "expected a single value, got a list; lists are only valid "
                                  "for sweepable keys under the sweep subcommand");
        return e;
    }

    double num(const std::string& key, double fallback) {
        const Entry* e = scalar_entry(key);
        return e ? to_double(pf, *e, key, e->values[0]) : fallback;
    }
    long integer(const std::string& key, long fallback) {
        const Entry* e = scalar_entry(key);
        return e ? to_long(pf, *e, key, e->values[0]) : fallback;
    }
    std::string word(const std::string& key, const std::string& fallback) {
        const Entry* e = scalar_entry(key);
        return e ? e->values[0] : fallback;
    }
    bool flag(const std::string& key, bool fallback) {
        const Entry* e = scalar_entry(key);
        if (!e) return fallback;
        const std::string& v = e->values[0];
        if (v == "true" || v == "on" || v == "1") return true;
        if (v == "false" || v == "off" || v == "0") return false;
        pf.fail(key, e->line, "expected true/false, got '" + v + "'");
    }

    // Sweepable keys: accept a list; the scalar field gets the first value.
    std::vector<double> num_list(const std::string& key) {
        Entry* e = pf.find(key);
        if (!e) return {};
        std::vector<double> out;
        for (const auto& tok : e->values) out.push_back(to_double(pf, *e, key, tok));
        return out;
    }
    std::vector<long> int_list(const std::string& key) {
        Entry* e = pf.find(key);
        if (!e) return {};
        std::vector<long> out;
        for (const auto& tok : e->values) out.push_back(to_long(pf, *e, key, tok));
        return out;
    }

    void require(const std::string& key, bool ok, int line, const std::string& msg) {
        if (!ok) pf.fail(key, line, msg);
    }
    int line_of(const std::string& key) {
        auto it = pf.entries.find(key);
        return it == pf.entries.end() ? 0 : it->second.line;
    }
};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    ParsedFile pf = tokenize(text, origin);
    Reader r{pf};
    RunConfig cfg;

    // potential
    {
        auto alphas = r.num_list("potential.alpha");
        if (!alphas.empty()) {
            cfg.alpha = alphas[0];
            if (alphas.size() > 1) cfg.sweep_alpha = alphas;
        }
        for (double a : alphas.empty() ? std::vector<double>{cfg.alpha} : alphas)
            r.require("potential.alpha", a > 0.0 && a < 2.0, r.line_of("potential.alpha"),
                      "alpha must lie in (0, 2): the growth bound needs a sub-electrostatic "
                      "singularity exponent");
        cfg.amplitude = r.num("potential.amplitude", cfg.amplitude);
        r.require("potential.amplitude", cfg.amplitude >= 0.0, r.line_of("potential.amplitude"),
                  "amplitude must be >= 0");
        cfg.image_shells = static_cast<int>(r.integer("potential.image_shells", cfg.image_shells));
        r.require("potential.image_shells", cfg.image_shells >= 0,
                  r.line_of("potential.image_shells"), "image_shells must be >= 0");
        cfg.taper_radius = r.num("potential.taper_radius", cfg.taper_radius);
        r.require("potential.taper_radius", cfg.taper_radius >= 0.0 && cfg.taper_radius <= 0.5,
                  r.line_of("potential.taper_radius"),
                  "taper_radius must lie in [0, 0.5] (0 disables the taper)");
    }
    // gibbs
    {
        auto betas = r.num_list("gibbs.beta");
        if (!betas.empty()) {
            cfg.beta = betas[0];
            if (betas.size() > 1) cfg.sweep_beta = betas;
        }
        for (double b : betas.empty() ? std::vector<double>{cfg.beta} : betas)
            r.require("gibbs.beta", b > 0.0, r.line_of("gibbs.beta"), "beta must be > 0");
        auto ns = r.int_list("gibbs.n");
        if (!ns.empty()) {
            cfg.n = static_cast<int>(ns[0]);
            if (ns.size() > 1)
                for (long v : ns) cfg.sweep_n.push_back(static_cast<int>(v));
        }
        for (long v : ns.empty() ? std::vector<long>{cfg.n} : ns)
            r.require("gibbs.n", v >= 2, r.line_of("gibbs.n"), "n must be >= 2");
        cfg.chain.burn_in_sweeps = r.integer("gibbs.burn_in_sweeps", cfg.chain.burn_in_sweeps);
        r.require("gibbs.burn_in_sweeps", cfg.chain.burn_in_sweeps >= 0,
                  r.line_of("gibbs.burn_in_sweeps"), "burn_in_sweeps must be >= 0");
        cfg.chain.thin_sweeps = r.integer("gibbs.thin_sweeps", cfg.chain.thin_sweeps);
        r.require("gibbs.thin_sweeps", cfg.chain.thin_sweeps >= 1, r.line_of("gibbs.thin_sweeps"),
                  "thin_sweeps must be >= 1");
        cfg.chain.proposal_step = r.num("gibbs.proposal_step", cfg.chain.proposal_step);
        cfg.chain.target_acceptance =
            r.num("gibbs.target_acceptance", cfg.chain.target_acceptance);
        r.require("gibbs.target_acceptance",
                  cfg.chain.target_acceptance > 0.0 && cfg.chain.target_acceptance < 1.0,
                  r.line_of("gibbs.target_acceptance"), "target_acceptance must lie in (0, 1)");
    }
    // shift
    {
        std::string kind = r.word("shift.kind", "gaussian_velocity");
        auto sigmas = r.num_list("shift.sigma");
        double sigma = sigmas.empty() ? 1.0 : sigmas[0];
        if (sigmas.size() > 1) cfg.sweep_sigma = sigmas;
        for (double s : sigmas)
            r.require("shift.sigma", s > 0.0, r.line_of("shift.sigma"), "sigma must be > 0");
        if (kind == "gaussian_velocity") {
            cfg.shift = GaussianVelocityShift{sigma};
        } else if (kind == "compact_velocity") {
            double dm = r.num("shift.delta_m", 1.0);
            r.require("shift.delta_m", dm > 0.0, r.line_of("shift.delta_m"),
                      "delta_m must be > 0");
            cfg.shift = CompactVelocityShift{dm};
        } else if (kind == "energy_sphere") {
            double rmax = r.num("shift.r_max", 0.0);
            r.require("shift.r_max", rmax >= 0.0, r.line_of("shift.r_max"),
                      "r_max must be >= 0 (0 = sqrt(N) * delta_N)");
            if (rmax == 0.0) {
                cfg.energy_sphere_auto_rmax = true;
                cfg.shift = EnergySphereShift{0.0};
            } else {
                cfg.shift = EnergySphereShift{rmax};
            }
        } else if (kind == "none") {
            cfg.shift = NoShift{};
        } else {
            pf.fail("shift.kind", r.line_of("shift.kind"),
                    "unknown shift kind '" + kind +
                        "' (gaussian_velocity | compact_velocity | energy_sphere | none)");
        }
    }
    // theorem
    {
        auto eps = r.num_list("theorem.epsilon");
        if (!eps.empty()) {
            cfg.theorem.epsilon = eps[0];
            if (eps.size() > 1) cfg.sweep_epsilon = eps;
        }
        for (double e : eps)
            r.require("theorem.epsilon", e > 0.0, r.line_of("theorem.epsilon"),
                      "epsilon must be > 0 (omit the key for the default)");
        cfg.theorem.a_exponent = r.num("theorem.a", cfg.theorem.a_exponent);
        cfg.theorem.neighbor_l =
            static_cast<int>(r.integer("theorem.neighbor_l", cfg.theorem.neighbor_l));
        r.require("theorem.neighbor_l", cfg.theorem.neighbor_l >= 0,
                  r.line_of("theorem.neighbor_l"), "neighbor_l must be >= 0 (0 = default)");
    }
    // integrator
    {
        cfg.integrator.dt = r.num("integrator.dt", cfg.integrator.dt);
        r.require("integrator.dt", cfg.integrator.dt > 0.0, r.line_of("integrator.dt"),
                  "dt must be > 0");
        cfg.integrator.t_end = r.num("integrator.t_end", cfg.integrator.t_end);
        r.require("integrator.t_end", cfg.integrator.t_end > 0.0, r.line_of("integrator.t_end"),
                  "t_end must be > 0");
        cfg.integrator.observations =
            static_cast<int>(r.integer("integrator.observations", cfg.integrator.observations));
        r.require("integrator.observations", cfg.integrator.observations >= 1,
                  r.line_of("integrator.observations"), "observations must be >= 1");
        cfg.integrator.min_pair_distance_floor =
            r.num("integrator.min_pair_distance_floor", cfg.integrator.min_pair_distance_floor);
        r.require("integrator.min_pair_distance_floor",
                  cfg.integrator.min_pair_distance_floor >= 0.0,
                  r.line_of("integrator.min_pair_distance_floor"),
                  "min_pair_distance_floor must be >= 0");
        cfg.integrator.energy_drift_tolerance =
            r.num("integrator.energy_drift_tolerance", cfg.integrator.energy_drift_tolerance);
        r.require("integrator.energy_drift_tolerance",
                  cfg.integrator.energy_drift_tolerance > 0.0,
                  r.line_of("integrator.energy_drift_tolerance"),
                  "energy_drift_tolerance must be > 0");
        cfg.integrator.max_halvings =
            static_cast<int>(r.integer("integrator.max_halvings", cfg.integrator.max_halvings));
        r.require("integrator.max_halvings",
                  cfg.integrator.max_halvings >= 0 && cfg.integrator.max_halvings <= 8,
                  r.line_of("integrator.max_halvings"), "max_halvings must lie in [0, 8]");
        std::string fm = r.word("integrator.force_method", "direct");
        if (fm == "direct") {
            cfg.integrator.force_method = ForceMethod::direct;
        } else if (fm == "cell_list") {
            cfg.integrator.force_method = ForceMethod::cell_list;
        } else {
            pf.fail("integrator.force_method", r.line_of("integrator.force_method"),
                    "unknown force method '" + fm + "' (direct | cell_list)");
        }
    }
    // monte_carlo
    {
        cfg.mc.samples = static_cast<int>(r.integer("monte_carlo.samples", cfg.mc.samples));
        r.require("monte_carlo.samples", cfg.mc.samples >= 2, r.line_of("monte_carlo.samples"),
                  "samples must be >= 2");
        long seed = r.integer("monte_carlo.seed", static_cast<long>(cfg.mc.seed));
        cfg.mc.seed = static_cast<std::uint64_t>(seed);
        cfg.mc.workers = static_cast<int>(r.integer("monte_carlo.workers", cfg.mc.workers));
        r.require("monte_carlo.workers", cfg.mc.workers >= 0, r.line_of("monte_carlo.workers"),
                  "workers must be >= 0 (0 = hardware)");
    }
    // checks
    {
        cfg.marginal_samples = r.integer("checks.marginal_samples", cfg.marginal_samples);
        r.require("checks.marginal_samples", cfg.marginal_samples >= 100,
                  r.line_of("checks.marginal_samples"), "marginal_samples must be >= 100");
        cfg.marginal_bins = static_cast<int>(r.integer("checks.marginal_bins", cfg.marginal_bins));
        r.require("checks.marginal_bins", cfg.marginal_bins >= 2 && cfg.marginal_bins <= 64,
                  r.line_of("checks.marginal_bins"), "marginal_bins must lie in [2, 64]");
        cfg.quad_base_n = static_cast<int>(r.integer("checks.quad_base_n", cfg.quad_base_n));
        r.require("checks.quad_base_n", cfg.quad_base_n >= 8 && cfg.quad_base_n % 2 == 0,
                  r.line_of("checks.quad_base_n"), "quad_base_n must be even and >= 8");
        cfg.condition_samples = r.integer("checks.condition_samples", cfg.condition_samples);
        r.require("checks.condition_samples", cfg.condition_samples >= 1,
                  r.line_of("checks.condition_samples"), "condition_samples must be >= 1");
    }
    // recipe
    {
        cfg.tau = r.num("recipe.tau", cfg.tau);
        r.require("recipe.tau", cfg.tau >= 0.0, r.line_of("recipe.tau"), "tau must be >= 0");
    }
    // output
    {
        cfg.out_dir = r.word("output.dir", cfg.out_dir);
        cfg.dump_trajectories = r.flag("output.dump_trajectories", cfg.dump_trajectories);
        cfg.emit_svg = r.flag("output.svg", cfg.emit_svg);
    }

    for (const auto& [key, entry] : pf.entries)
        if (!entry.used) pf.fail(key, entry.line, "unknown key '" + key + "'");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

GibbsParams RunConfig::gibbs_params() const {
    GibbsParams p;
    p.beta = beta;
    p.n = n;
    p.spec = make_potential(alpha, amplitude, image_shells, taper_radius);
    return p;
}

ShiftSpec RunConfig::resolved_shift(int n_eff) const {
    if (energy_sphere_auto_rmax) {
        TheoremParams tp = theorem;
        double eps = tp.epsilon > 0.0 ? tp.epsilon : std::min(1.0 - alpha / 3.0, 0.5);
        double delta_n = std::pow(static_cast<double>(n_eff), -eps);
        return EnergySphereShift{std::sqrt(static_cast<double>(n_eff)) * delta_n};
    }
    return shift;
}

std::string canonical_config(const RunConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "alpha=" << cfg.alpha << "\namplitude=" << cfg.amplitude
       << "\nimage_shells=" << cfg.image_shells << "\ntaper_radius=" << cfg.taper_radius
       << "\nbeta=" << cfg.beta << "\nn=" << cfg.n
       << "\nburn_in_sweeps=" << cfg.chain.burn_in_sweeps
       << "\nthin_sweeps=" << cfg.chain.thin_sweeps
       << "\nproposal_step=" << cfg.chain.proposal_step
       << "\ntarget_acceptance=" << cfg.chain.target_acceptance
       << "\nshift=" << shift_kind(cfg.shift);
    if (const auto* g = std::get_if<GaussianVelocityShift>(&cfg.shift)) os << ":" << g->sigma;
    if (const auto* c = std::get_if<CompactVelocityShift>(&cfg.shift)) os << ":" << c->delta_m;
    if (const auto* e = std::get_if<EnergySphereShift>(&cfg.shift))
        os << ":" << (cfg.energy_sphere_auto_rmax ? 0.0 : e->r_max);
    os << "\nepsilon=" << cfg.theorem.epsilon << "\na=" << cfg.theorem.a_exponent
       << "\nneighbor_l=" << cfg.theorem.neighbor_l << "\ndt=" << cfg.integrator.dt
       << "\nt_end=" << cfg.integrator.t_end << "\nobservations=" << cfg.integrator.observations
       << "\nfloor=" << cfg.integrator.min_pair_distance_floor
       << "\ndrift_tol=" << cfg.integrator.energy_drift_tolerance
       << "\nmax_halvings=" << cfg.integrator.max_halvings
       << "\nforce_method=" << (cfg.integrator.force_method == ForceMethod::direct ? "direct" : "cell_list")
       << "\nsamples=" << cfg.mc.samples << "\nseed=" << cfg.mc.seed << "\ntau=" << cfg.tau
       << "\n";
    return os.str();
}

std::string config_digest(const RunConfig& cfg) {
    std::string s = canonical_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace torstab
