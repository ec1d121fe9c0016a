#include "obatalab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "obatalab/errors.hpp"
#include "obatalab/format.hpp"
#include "obatalab/isoperimetry.hpp"
#include "obatalab/localization.hpp"
#include "obatalab/obata1d.hpp"
#include "obatalab/parallel.hpp"
#include "obatalab/spectral.hpp"

namespace obatalab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Slack on the spectral inequalities checked by `spectrum`.
constexpr double kSpectralSlack = 1e-6;
/// Allowed shortfall of a fitted exponent below its target in `obata`.
constexpr double kSlopeSlack = 0.1;
/// Largest accepted max/min ratio of a sweep constant.
constexpr double kSweepRange = 10.0;
constexpr std::size_t kProfileRadii = 50;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ParseError("cannot open " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string short_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t\r"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// Empty cells read as NaN.
double parse_cell(const std::string& s, std::size_t line) {
    if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not a number");
    return v;
}

/// Plotted points in axis coordinates (log10 on log axes), sorted by x.
std::vector<std::pair<double, double>> plot_points(const Table& t, const PlotSpec& spec) {
    if (t.rows.empty()) throw ShapeError("cannot plot an empty table");
    const std::size_t xi = t.column(spec.x), yi = t.column(spec.y);
    const std::optional<std::size_t> mi = spec.mask ? std::optional(t.column(*spec.mask)) : std::nullopt;
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : t.rows) {
        if (mi && row[*mi] != 0.0) continue;
        double x = row[xi], y = row[yi];
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (spec.logx) {
            if (!(x > 0.0)) continue;
            x = std::log10(x);
        }
        if (spec.logy) {
            if (!(y > 0.0)) continue;
            y = std::log10(y);
        }
        pts.emplace_back(x, y);
    }
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return pts;
}

std::pair<double, double> axis_range(double lo, double hi) {
    if (hi - lo > 0.0) return {lo, hi};
    const double pad = std::max(0.5, 0.05 * std::abs(lo));
    return {lo - pad, hi + pad};
}

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ParseError("cannot write " + p.string());
    out << body;
}

json tolerances() {
    return {
        {"cd_inequality_slack", measure::kInequalitySlack},
        {"mass_tolerance", measure::kMassTolerance},
        {"rigid_tolerance", loc::kRigidTolerance},
        {"identity_slack", loc::kIdentitySlack},
        {"volume_slack", loc::kVolumeSlack},
        {"constant_ceiling", loc::kConstantCeiling},
        {"spectral_slack", kSpectralSlack},
        {"slope_slack", kSlopeSlack},
        {"sweep_range", kSweepRange},
    };
}

/// What one command produced, before anything is written.
struct Outcome {
    std::string csv;
    json results;
    bool violation = false;
    std::optional<PlotSpec> plot;
};

std::vector<double> default_params() {
    std::vector<double> p;
    for (int k = 0; k < 5; ++k) p.push_back(0.2 * std::pow(2.0, -k));
    return p;
}

Outcome run_profile(const RunConfig& c) {
    const std::vector<double> vs = c.v.empty() ? std::vector<double>{0.5} : c.v;
    const double D = c.diam.value_or(measure::kPi);
    std::ostringstream csv;
    csv << "v,value,argmin_b\n";
    json rows = json::array();
    for (double v : vs) {
        const auto r = iso::profile({c.dim, D, v});
        csv << format_double(v) << ',' << format_double(r.value) << ',' << format_double(r.argmin_b) << '\n';
        rows.push_back({{"v", v}, {"value", r.value}, {"argmin_b", r.argmin_b}});
    }
    Outcome o;
    o.csv = csv.str();
    o.results = {{"N", c.dim}, {"D", D}, {"profile", rows}};
    o.plot = PlotSpec{"v", "value", false, false, "isoperimetric profile", std::nullopt};
    return o;
}

measure::WeightedInterval spectrum_density(const RunConfig& c) {
    const double K = c.K.value_or(c.dim - 1.0);
    if (c.density) return measure::read_density_csv_file(c.density->string(), K, c.dim);
    if (c.diam) return measure::truncated_model(c.dim, *c.diam, c.grid);
    if (!c.model) throw ParameterDomainError("spectrum needs --model, --diam or --density");
    return measure::model_density(c.dim, measure::Grid::uniform(measure::kPi, c.grid));
}

Outcome run_spectrum(const RunConfig& c) {
    const auto w = spectrum_density(c);
    const auto s = spectral::neumann_eigs(w, c.count);
    std::ostringstream csv;
    csv << "k,lambda,error_bar,extrapolated,residual\n";
    json rows = json::array();
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
        const double bar = k < s.error_bars.size() ? s.error_bars[k] : 0.0;
        const double ext = k < s.extrapolated.size() ? s.extrapolated[k] : s.eigenvalues[k];
        const double res = k < s.residuals.size() ? s.residuals[k] : s.residual;
        csv << k + 1 << ',' << format_double(s.eigenvalues[k]) << ',' << format_double(bar) << ','
            << format_double(ext) << ',' << format_double(res) << '\n';
        rows.push_back({{"k", k + 1}, {"lambda", s.eigenvalues[k]}, {"error_bar", bar}, {"extrapolated", ext}});
    }
    const double l1 = s.extrapolated.empty() ? s.eigenvalues[0] : s.extrapolated[0];
    const auto lich = spectral::lichnerowicz_check(w, l1);
    Outcome o;
    o.csv = csv.str();
    o.violation = lich.margin < -kSpectralSlack || lich.diameter_lhs > lich.diameter_rhs + kSpectralSlack;
    o.results = {{"N", w.N()},
                 {"K", w.K()},
                 {"D", w.length()},
                 {"lambda1", s.eigenvalues[0]},
                 {"lambda1_extrapolated", l1},
                 {"eigenvalues", rows},
                 {"lichnerowicz",
                  {{"margin", lich.margin}, {"diameter_lhs", lich.diameter_lhs}, {"diameter_rhs", lich.diameter_rhs}}}};
    o.plot = PlotSpec{"k", "lambda", false, false, "Neumann eigenvalues", std::nullopt};
    return o;
}

Outcome run_obata(const RunConfig& c) {
    const std::vector<double> params = c.params.empty() ? default_params() : c.params;
    Outcome o;
    std::ostringstream csv;
    if (c.diameter) {
        const auto t = obata::diameter_deficit_sweep(c.dim, params, c.grid);
        obata::write_diameter_csv(csv, t);
        o.results = obata::diameter_summary(t);
        o.violation = !t.all_hold;
        o.plot = PlotSpec{"eps", "gap", true, true, "spectral gap excess against diameter defect", std::nullopt};
    } else {
        obata::ExperimentSpec spec;
        spec.N = c.dim;
        spec.family = obata::parse_family(c.family);
        spec.params = params;
        spec.cells = c.grid;
        spec.seed = c.seed;
        const auto t = obata::deficit_distance_sweep(spec);
        obata::write_sweep_csv(csv, t);
        o.results = obata::sweep_summary(t);
        o.results["family"] = c.family;
        o.violation = t.fit.slope < t.exponent - kSlopeSlack;
        o.plot = PlotSpec{"delta", "dist_w12", true, true, "distance to the cosine against deficit", "excluded"};
    }
    o.csv = csv.str();
    return o;
}

bool offsets_vanish(const loc::RayFamily& f) {
    return std::all_of(f.rays.begin(), f.rays.end(),
                       [](const loc::Ray& r) { return r.a.value_or(0.0) == 0.0 && r.b.value_or(0.0) == 0.0; });
}

loc::Params loc_params(const RunConfig& c) { return {c.beta, c.gamma}; }

Outcome run_localize(const RunConfig& c) {
    if (!c.config) throw ParameterDomainError("localize needs --config");
    const auto f = loc::read_family_file(*c.config, c.grid);
    const auto rep = loc::localize(f, loc_params(c));
    Outcome o;
    std::ostringstream csv;
    loc::write_ray_csv(csv, f, rep);
    o.csv = csv.str();
    o.results = loc::report_summary(rep);
    o.violation = rep.violation();
    if (offsets_vanish(f)) {
        std::size_t bad = 0;
        json radii = json::array();
        for (const auto& v : loc::volume_profile(f, kProfileRadii)) {
            bad += !v.lower_holds + !v.upper_holds;
            radii.push_back({{"r", v.r}, {"ball", v.ball}, {"lower", v.lower}, {"upper", v.upper}});
        }
        o.results["volume"] = {{"radii", radii}, {"violations", bad}};
        o.violation = o.violation || bad > 0;
    }
    o.plot = PlotSpec{"index", "c", false, false, "ray coefficients", std::nullopt};
    return o;
}

Outcome run_sweep(const RunConfig& c) {
    if (!c.config) throw ParameterDomainError("sweep needs --config");
    json doc;
    try {
        doc = json::parse(read_bytes(*c.config));
        if (doc.at("schema").get<std::string>() != kSweepSchema)
            throw ParseError("sweep config schema must be '" + std::string(kSweepSchema) + "'");
        if (doc.at("kind").get<std::string>() != "localization") throw ParseError("unknown sweep kind");
    } catch (const json::exception& e) {
        throw ParseError(std::string("sweep config: ") + e.what());
    }
    for (const auto& [key, _] : doc.items())
        if (key != "schema" && key != "kind" && key != "members") throw ParseError("unknown sweep key '" + key + "'");
    std::vector<fs::path> members;
    try {
        for (const auto& m : doc.at("members")) members.push_back(c.config->parent_path() / m.get<std::string>());
    } catch (const json::exception& e) {
        throw ParseError(std::string("sweep members: ") + e.what());
    }
    if (members.empty()) throw ParseError("sweep has no members");
    const auto params = loc_params(c);
    const auto reports = parallel_map(members, [&](const fs::path& p) {
        return loc::localize(loc::read_family_file(p, c.grid), params);
    });
    const auto a = loc::analyze_sweep(reports);
    std::ostringstream csv;
    csv << "member,delta,final_dist,variance_ratio,mass_ratio,rigid,violation\n";
    json rows = json::array();
    bool any = false;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        const double var = r.variance ? r.variance->ratio : 0.0;
        csv << i << ',' << format_double(r.ledger.delta) << ',' << format_double(r.ledger.final_dist) << ','
            << format_double(var) << ',' << format_double(r.long_mass.bound.ratio) << ',' << int(r.ledger.rigid)
            << ',' << int(r.violation()) << '\n';
        rows.push_back(loc::report_summary(r));
        any = any || r.violation();
    }
    Outcome o;
    o.csv = csv.str();
    const double eta = loc::target_exponent(reports.front().ledger.N);
    o.results = {{"members", rows},
                 {"final_fit",
                  {{"slope", a.final_fit.slope},
                   {"intercept", a.final_fit.intercept},
                   {"r_squared", a.final_fit.r_squared},
                   {"points", a.final_fit.points}}},
                 {"target_exponent", eta},
                 {"variance_range", a.variance_range},
                 {"mass_range", a.mass_range},
                 {"identities_hold", a.identities_hold}};
    o.violation = any || !a.identities_hold || !(a.variance_range <= kSweepRange) ||
                  !(a.mass_range <= kSweepRange);
    o.plot = PlotSpec{"delta", "final_dist", true, true, "distance to the cosine of the pole distance", "rigid"};
    return o;
}

Outcome run_check_density(const RunConfig& c) {
    if (!c.density) throw ParameterDomainError("check-density needs --density");
    const auto d = check_density(*c.density, c.K.value_or(c.dim - 1.0), c.dim);
    const auto& v = d.verdict;
    std::ostringstream csv;
    csv << "pass,triples_checked,diameter_violation,x0,x1,t,excess\n";
    csv << int(v.pass) << ',' << v.triples_checked << ',' << int(v.diameter_violation);
    json witness = nullptr;
    if (v.witness) {
        csv << ',' << format_double(v.witness->x0) << ',' << format_double(v.witness->x1) << ','
            << format_double(v.witness->t) << ',' << format_double(v.witness->excess) << '\n';
        witness = {{"x0", v.witness->x0}, {"x1", v.witness->x1}, {"t", v.witness->t}, {"excess", v.witness->excess}};
    } else {
        csv << ",,,,\n";
    }
    Outcome o;
    o.csv = csv.str();
    o.violation = !v.pass;
    o.results = {{"pass", v.pass},
                 {"triples_checked", v.triples_checked},
                 {"diameter_violation", v.diameter_violation},
                 {"witness", witness},
                 {"K", d.K},
                 {"N", d.N},
                 {"D", d.length}};
    return o;
}

Outcome dispatch(const RunConfig& c) {
    switch (c.command) {
        case Command::Profile: return run_profile(c);
        case Command::Spectrum: return run_spectrum(c);
        case Command::Obata: return run_obata(c);
        case Command::Localize: return run_localize(c);
        case Command::Sweep: return run_sweep(c);
        case Command::CheckDensity: return run_check_density(c);
    }
    throw ParameterDomainError("unknown command");
}

}  // namespace

std::string command_name(Command c) {
    switch (c) {
        case Command::Profile: return "profile";
        case Command::Spectrum: return "spectrum";
        case Command::Obata: return "obata";
        case Command::Localize: return "localize";
        case Command::Sweep: return "sweep";
        case Command::CheckDensity: return "check-density";
    }
    return "unknown";
}

Command parse_command(const std::string& name) {
    for (Command c : {Command::Profile, Command::Spectrum, Command::Obata, Command::Localize, Command::Sweep,
                      Command::CheckDensity})
        if (command_name(c) == name) return c;
    throw ParseError("unknown command '" + name + "'");
}

json config_json(const RunConfig& c) {
    return {{"command", command_name(c.command)},
            {"dim", c.dim},
            {"diam", opt(c.diam)},
            {"K", opt(c.K)},
            {"grid", c.grid},
            {"seed", c.seed},
            {"beta", opt(c.beta)},
            {"gamma", opt(c.gamma)},
            {"v", c.v},
            {"params", c.params},
            {"family", c.family},
            {"model", c.model},
            {"diameter", c.diameter},
            {"count", c.count},
            {"config", c.config ? json(c.config->generic_string()) : json(nullptr)},
            {"density", c.density ? json(c.density->generic_string()) : json(nullptr)},
            {"plot", c.plot}};
}

std::string config_hash(const RunConfig& c) { return hex(fnv1a(config_json(c).dump())); }

Table Table::parse(std::istream& in) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (t.columns.empty()) {
            t.columns = std::move(cells);
            continue;
        }
        if (cells.size() != t.columns.size())
            throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                             " fields");
        std::vector<double> row;
        for (const auto& s : cells) row.push_back(parse_cell(s, lineno));
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw ParseError("table has no header");
    return t;
}

Table Table::parse_file(const fs::path& path) {
    std::istringstream in(read_bytes(path));
    return parse(in);
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ShapeError("table has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

SlopeFit plot_fit(const Table& t, const PlotSpec& spec) {
    const auto pts = plot_points(t, spec);
    SlopeFit f;
    f.points = pts.size();
    if (pts.size() < 2) return f;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    // log10 on both axes; the slope is base independent, the intercept is converted to ln.
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0)) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n * std::log(10.0);
    return f;
}

std::string render_plot(const Table& t, const PlotSpec& spec) {
    const auto pts = plot_points(t, spec);
    if (pts.empty()) throw ShapeError("no plottable points");
    constexpr double W = 640, H = 400, left = 80, right = 20, top = 40, bottom = 60;
    double x0 = pts.front().first, x1 = pts.back().first;
    double y0 = pts.front().second, y1 = y0;
    for (const auto& p : pts) {
        y0 = std::min(y0, p.second);
        y1 = std::max(y1, p.second);
    }
    std::tie(x0, x1) = axis_range(x0, x1);
    std::tie(y0, y1) = axis_range(y0, y1);
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
    auto label = [](const std::string& name, bool log) { return log ? "log10 " + name : name; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << xml_escape(spec.title) << "</text>\n";
    s << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(H - bottom) << "\" x2=\"" << fixed(W - right)
      << "\" y2=\"" << fixed(H - bottom) << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(left) << "\" y2=\""
      << fixed(H - bottom) << "\" stroke=\"black\"/>\n";
    const auto tick = [&](double x, double y, const char* anchor, double v) {
        s << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" text-anchor=\"" << anchor
          << "\" font-family=\"sans-serif\" font-size=\"10\">" << short_num(v) << "</text>\n";
    };
    tick(left, H - bottom + 16, "start", x0);
    tick(W - right, H - bottom + 16, "end", x1);
    tick(left - 6, H - bottom, "end", y0);
    tick(left - 6, top + 4, "end", y1);
    s << "<text x=\"" << fixed((left + W - right) / 2) << "\" y=\"" << fixed(H - 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(label(spec.x, spec.logx)) << "</text>\n";
    s << "<text x=\"16\" y=\"" << fixed((top + H - bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fixed((top + H - bottom) / 2) << ")\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(label(spec.y, spec.logy)) << "</text>\n";
    s << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
        s << (i ? " " : "") << fixed(px(pts[i].first)) << ',' << fixed(py(pts[i].second));
    s << "\"/>\n";
    if (spec.logx && spec.logy && pts.size() >= 2) {
        const auto f = plot_fit(t, spec);
        s << "<text x=\"" << fixed(W - right) << "\" y=\"" << fixed(top + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">slope " << fixed(f.slope, 6)
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_plot(const fs::path& path, const Table& t, const PlotSpec& spec) {
    const std::string svg = render_plot(t, spec);
    write_text(path, svg);
}

DensityCheck check_density(const fs::path& path, double K, double N) {
    const auto w = measure::read_density_csv_file(path.string(), K, N);
    return {measure::cd_check(w), w.length(), K, N};
}

int run(const RunConfig& config, std::ostream& log) {
    try {
        const auto start = std::chrono::steady_clock::now();
        if (config.grid < 16 || config.grid % 2 != 0) throw ParameterDomainError("--grid must be even and >= 16");
        Outcome o = dispatch(config);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        json summary = {{"software", {{"name", kSoftware}, {"version", OBATALAB_VERSION}}},
                        {"command", command_name(config.command)},
                        {"config", config_json(config)},
                        {"config_hash", config_hash(config)},
                        {"seed", config.seed},
                        {"grid", config.grid},
                        {"tolerances", tolerances()},
                        {"results", o.results},
                        {"violation", o.violation},
                        {"runtime_seconds", config.timing ? json(seconds) : json(nullptr)}};
        json inputs = json::object();
        for (const auto& p : {config.config, config.density})
            if (p) inputs[p->generic_string()] = hex(fnv1a(read_bytes(*p)));
        summary["input_hashes"] = inputs;

        std::string svg;
        if (config.plot && o.plot) {
            std::istringstream in(o.csv);
            svg = render_plot(Table::parse(in), *o.plot);
        }
        fs::create_directories(config.out);
        write_text(config.out / "results.csv", o.csv);
        write_text(config.out / "summary.json", summary.dump(2) + "\n");
        if (!svg.empty()) write_text(config.out / "plot.svg", svg);
        if (o.violation) {
            log << command_name(config.command) << ": violation recorded in " << (config.out / "summary.json").string()
                << '\n';
            return kExitViolation;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitError;
    }
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Spectral gap and Obata rigidity laboratory for weighted intervals"};
    app.set_version_flag("--version", std::string(OBATALAB_VERSION));
    app.require_subcommand(1);

    RunConfig c;
    std::string out = ".", config_path, density_path;
    std::optional<double> diam, K, beta, gamma;
    bool no_plot = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--dim", c.dim, "dimension parameter N > 1");
        sub->add_option("--grid", c.grid, "grid cells (even)");
        sub->add_option("--seed", c.seed, "64-bit seed");
        sub->add_option("--out", out, "output directory");
        sub->add_flag("--timing", c.timing, "record the runtime in summary.json");
        sub->add_flag("--no-plot", no_plot, "skip plot.svg");
    };

    auto* profile = app.add_subcommand("profile", "model isoperimetric profile");
    common(profile);
    profile->add_option("--diam", diam, "diameter D");
    profile->add_option("--v", c.v, "volume fraction (repeatable)")->take_all();

    auto* spectrum = app.add_subcommand("spectrum", "Neumann eigenvalues of a weighted interval");
    common(spectrum);
    spectrum->add_flag("--model", c.model, "model density on [0, pi]");
    spectrum->add_option("--diam", diam, "truncated model on [0, D]");
    spectrum->add_option("--density", density_path, "t,h density CSV");
    spectrum->add_option("--K", K, "curvature parameter for --density");
    spectrum->add_option("--count", c.count, "number of eigenvalues");

    auto* obata_cmd = app.add_subcommand("obata", "deficit against distance sweeps");
    common(obata_cmd);
    obata_cmd->add_option("--family", c.family, "truncated-model | perturbed-cosine | seeded-generated");
    obata_cmd->add_option("--params", c.params, "sweep parameters")->take_all();
    obata_cmd->add_flag("--diameter", c.diameter, "diameter sweep on the truncated model");

    auto* localize = app.add_subcommand("localize", "ray family pipeline");
    common(localize);
    localize->add_option("--config", config_path, "rayfam-v1 document")->required();
    localize->add_option("--beta", beta);
    localize->add_option("--gamma", gamma);

    auto* sweep = app.add_subcommand("sweep", "ray family sweep");
    common(sweep);
    sweep->add_option("--config", config_path, "sweep-v1 document")->required();
    sweep->add_option("--beta", beta);
    sweep->add_option("--gamma", gamma);

    auto* check = app.add_subcommand("check-density", "CD(K, N) check of a density CSV");
    common(check);
    check->add_option("--density", density_path, "t,h density CSV")->required();
    check->add_option("--K", K, "curvature parameter, default N - 1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }
    c.command = parse_command(app.get_subcommands().front()->get_name());
    c.out = out;
    c.diam = diam;
    c.K = K;
    c.beta = beta;
    c.gamma = gamma;
    c.plot = !no_plot;
    if (!config_path.empty()) c.config = config_path;
    if (!density_path.empty()) c.density = density_path;
    return run(c, std::cerr);
}

}  // namespace obatalab::cli
