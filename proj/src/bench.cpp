#include "ptcflow/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

namespace ptcflow {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

StrategyKind strategy_from_string(const std::string& s) {
    if (s == "iter_schedule") return StrategyKind::IterSchedule;
    if (s == "err_controller") return StrategyKind::ErrController;
    if (s == "learned") return StrategyKind::Learned;
    if (s == "newton_constant") return StrategyKind::NewtonConstant;
    if (s == "newton_adaptive") return StrategyKind::NewtonAdaptive;
    throw std::invalid_argument("unknown strategy: " + s);
}

GeometrySpec parse_geometry(const KeyValueFile& kv) {
    GeometrySpec g;
    const std::string kind = kv.get("geometry");
    if (kind == "backstep") {
        g.kind = GeometryKind::BackStep;
        g.inflow_width = kv.get_double("inflow_width");
        g.inflow_length = kv.get_double("inflow_length");
        g.outflow_width = kv.get_double("outflow_width");
        g.outflow_length = kv.get_double("outflow_length");
    } else if (kind == "annulus") {
        g.kind = GeometryKind::Annulus;
        g.inner_radius = kv.get_double("inner_radius");
        g.outer_radius = kv.get_double("outer_radius");
    } else {
        throw std::invalid_argument("config: unknown geometry '" + kind + "'");
    }
    const std::string ob = kv.get_or("obstacle", "none");
    if (ob == "circle") {
        g.obstacle.kind = ObstacleKind::Circle;
        g.obstacle.radius = kv.get_double("obstacle_radius");
    } else if (ob == "ellipse") {
        g.obstacle.kind = ObstacleKind::Ellipse;
        g.obstacle.a = kv.get_double("obstacle_a");
        g.obstacle.b = kv.get_double("obstacle_b");
    } else if (ob != "none") {
        throw std::invalid_argument("config: unknown obstacle '" + ob + "'");
    }
    if (g.obstacle.kind != ObstacleKind::None) {
        g.obstacle.cx = kv.get_double("obstacle_x");
        g.obstacle.cy = kv.get_double("obstacle_y");
    }
    const std::string tr = kv.get_or("transform", "identity");
    if (tr == "identity")
        g.transform.kind = TransformKind::Identity;
    else if (tr == "mirror_x")
        g.transform.kind = TransformKind::MirrorX;
    else if (tr == "rotate90")
        g.transform.kind = TransformKind::Rotate90CCW;
    else if (tr == "scale") {
        g.transform.kind = TransformKind::Scale;
        g.transform.scale_factor = kv.get_double("scale_factor");
    } else {
        throw std::invalid_argument("config: unknown transform '" + tr + "'");
    }
    return g;
}

FluidProps parse_props(const KeyValueFile& kv) {
    FluidProps p;
    p.rho = kv.get_double_or("rho", 1000.0);
    p.mu = kv.get_double_or("mu", 1e-3);
    p.body_force[0] = kv.get_double_or("body_force_x", 0.0);
    p.body_force[1] = kv.get_double_or("body_force_y", 0.0);
    return p;
}

}  // namespace

Problem ExperimentConfig::make_problem() const {
    Problem problem;
    problem.mesh = generate_mesh(geometry, h_max);
    problem.props = props;
    if (geometry.kind == GeometryKind::Annulus)
        problem.bc.moving_wall_speed = velocity;
    else
        problem.bc.inlet_peak_velocity = velocity;
    problem.bc.outlet_pressure = outlet_pressure;
    return problem;
}

ExperimentConfig parse_experiment_config(const KeyValueFile& kv) {
    ExperimentConfig cfg;
    cfg.id = kv.get("id");
    cfg.family = kv.get_or("family", "run");
    cfg.geometry = parse_geometry(kv);
    cfg.h_max = kv.get_double("h_max");
    cfg.velocity = kv.get_double("velocity");
    cfg.props = parse_props(kv);
    cfg.outlet_pressure = kv.get_double_or("outlet_pressure", 0.0);
    for (const auto& s : kv.get_list("strategies")) cfg.strategies.push_back(strategy_from_string(s));
    if (cfg.strategies.empty()) throw std::invalid_argument("config: empty strategy list");
    cfg.tol = kv.get_double_or("tol", 1e-6);
    cfg.max_iter = kv.get_int_or("max_iter", 100);
    cfg.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", 1));
    return cfg;
}

DataGenConfig parse_datagen_config(const KeyValueFile& kv) {
    DataGenConfig cfg;
    cfg.id = kv.get("id");
    cfg.geometry = parse_geometry(kv);
    cfg.h_max = kv.get_double("h_max");
    cfg.props = parse_props(kv);
    if (cfg.geometry.kind == GeometryKind::Annulus)
        cfg.bc.moving_wall_speed = kv.get_double("velocity");
    else
        cfg.bc.inlet_peak_velocity = kv.get_double("velocity");
    cfg.bc.outlet_pressure = kv.get_double_or("outlet_pressure", 0.0);
    if (kv.has("snapshots")) {
        cfg.snapshots.clear();
        for (const auto& s : kv.get_list("snapshots")) cfg.snapshots.push_back(std::stoi(s));
    }
    return cfg;
}

namespace {

GeometrySpec b1_geometry() {
    GeometrySpec g;
    g.kind = GeometryKind::BackStep;
    g.inflow_width = 0.05;
    g.inflow_length = 0.25;
    g.outflow_width = 0.12;
    g.outflow_length = 1.15;
    return g;
}

GeometrySpec b2_geometry() {
    GeometrySpec g = b1_geometry();
    g.inflow_width = 0.08;
    g.outflow_width = 0.22;
    return g;
}

GeometrySpec c_geometry() {
    GeometrySpec g;
    g.kind = GeometryKind::Annulus;
    g.inner_radius = 0.2;
    g.outer_radius = 0.4;
    return g;
}

ExperimentConfig make_config(const std::string& family, const GeometrySpec& geom, double h,
                             double u) {
    ExperimentConfig cfg;
    cfg.family = family;
    cfg.id = family + "_h" + fmt(h) + "_u" + fmt(u);
    cfg.geometry = geom;
    cfg.h_max = h;
    cfg.velocity = u;
    cfg.strategies = {StrategyKind::IterSchedule, StrategyKind::ErrController,
                      StrategyKind::NewtonConstant, StrategyKind::NewtonAdaptive};
    return cfg;
}

}  // namespace

std::vector<ExperimentConfig> desk_preset() {
    std::vector<ExperimentConfig> configs;
    for (double h : {0.0256, 0.0206, 0.0156})
        for (double u : {0.001, 0.005, 0.012}) configs.push_back(make_config("B1", b1_geometry(), h, u));
    for (double h : {0.022, 0.018})
        for (double u : {0.01, 0.05}) configs.push_back(make_config("C", c_geometry(), h, u));
    for (double x : {0.37, 1.1})
        for (double u : {0.004, 0.008}) {
            GeometrySpec g = b1_geometry();
            g.obstacle.kind = ObstacleKind::Circle;
            g.obstacle.radius = 0.03;
            g.obstacle.cx = x;
            g.obstacle.cy = 0.06;
            ExperimentConfig cfg = make_config("BO", g, 0.0126, u);
            cfg.id = "BO_x" + fmt(x) + "_u" + fmt(u);
            configs.push_back(cfg);
        }
    return configs;
}

std::vector<ExperimentConfig> full_preset() {
    std::vector<ExperimentConfig> configs;
    auto linspace_step = [](double a, double step, double b) {
        std::vector<double> v;
        for (double x = a; x < b + 0.5 * step; x += step) v.push_back(x);
        return v;
    };

    const std::vector<double> b1_u = {0.001, 0.004, 0.007, 0.01, 0.012, 0.015};
    const std::vector<double> b1_h = linspace_step(0.0106, 0.005, 0.0256);
    for (double h : b1_h)
        for (double u : b1_u) configs.push_back(make_config("B1", b1_geometry(), h, u));

    {
        GeometrySpec g = b1_geometry();
        g.transform = {TransformKind::Scale, 0.1};
        const std::vector<double> u10 = {0.01, 0.04, 0.07, 0.1, 0.12, 0.15};
        for (double h : linspace_step(0.00106, 0.0005, 0.00256))
            for (double u : u10) configs.push_back(make_config("B1S", g, h, u));
    }

    const std::vector<double> b2_u = linspace_step(0.001, 0.003, 0.01);
    for (double h : {0.0126, 0.0156, 0.0186, 0.0206})
        for (double u : b2_u) configs.push_back(make_config("B2", b2_geometry(), h, u));

    {
        GeometrySpec g = b2_geometry();
        g.transform = {TransformKind::Scale, 0.1};
        for (double h : {0.00126, 0.00156, 0.00186, 0.00206})
            for (double u : linspace_step(0.01, 0.03, 0.1))
                configs.push_back(make_config("B2S", g, h, u));
    }

    {
        GeometrySpec g = b1_geometry();
        g.transform.kind = TransformKind::MirrorX;
        for (double h : b1_h)
            for (double u : b1_u) configs.push_back(make_config("BM", g, h, u));
        g.transform.kind = TransformKind::Rotate90CCW;
        for (double h : b1_h)
            for (double u : b1_u) configs.push_back(make_config("BR", g, h, u));
    }

    const std::vector<double> c_u = {0.01, 0.03, 0.04, 0.05, 0.07, 0.1};
    for (double h : linspace_step(0.014, 0.002, 0.022))
        for (double u : c_u) configs.push_back(make_config("C", c_geometry(), h, u));

    {
        GeometrySpec g = c_geometry();
        g.transform = {TransformKind::Scale, 0.2};
        for (double h : linspace_step(0.0028, 0.0004, 0.0044))
            for (double u : {0.01, 0.03, 0.05}) configs.push_back(make_config("CS", g, h, u));
    }

    // obstacle variants: circle, wide ellipse, tall ellipse
    struct Shape {
        ObstacleKind kind;
        double r, a, b;
        const char* tag;
    };
    const Shape bo_shapes[] = {{ObstacleKind::Circle, 0.03, 0, 0, "circle"},
                               {ObstacleKind::Ellipse, 0, 0.03, 0.02, "ellw"},
                               {ObstacleKind::Ellipse, 0, 0.02, 0.03, "ellt"}};
    std::vector<std::pair<double, double>> bo_pos;
    for (double y = 0.035; y < 0.0825; y += 0.005) bo_pos.emplace_back(0.37, y);
    bo_pos.emplace_back(0.3, 0.04);
    bo_pos.emplace_back(1.1, 0.04);
    for (const auto& shape : bo_shapes)
        for (const auto& [x, y] : bo_pos) {
            GeometrySpec g = b1_geometry();
            g.obstacle.kind = shape.kind;
            g.obstacle.radius = shape.r;
            g.obstacle.a = shape.a;
            g.obstacle.b = shape.b;
            g.obstacle.cx = x;
            g.obstacle.cy = y;
            ExperimentConfig cfg = make_config("BO", g, 0.0126, 0.008);
            cfg.id = "BO_" + std::string(shape.tag) + "_x" + fmt(x) + "_y" + fmt(y);
            configs.push_back(cfg);
        }

    const Shape co_shapes[] = {{ObstacleKind::Circle, 0.04, 0, 0, "circle"},
                               {ObstacleKind::Ellipse, 0, 0.03, 0.02, "ellw"},
                               {ObstacleKind::Ellipse, 0, 0.02, 0.03, "ellt"}};
    for (const auto& shape : co_shapes)
        for (double h : {0.01, 0.03, 0.05})
            for (double u : linspace_step(0.014, 0.002, 0.022)) {
                GeometrySpec g = c_geometry();
                g.obstacle.kind = shape.kind;
                g.obstacle.radius = shape.r;
                g.obstacle.a = shape.a;
                g.obstacle.b = shape.b;
                g.obstacle.cx = 0.1;
                g.obstacle.cy = 0.4;
                ExperimentConfig cfg = make_config("CO", g, h, u);
                cfg.id = "CO_" + std::string(shape.tag) + "_h" + fmt(h) + "_u" + fmt(u);
                configs.push_back(cfg);
            }
    return configs;
}

std::vector<DataGenConfig> desk_data_preset() {
    std::vector<DataGenConfig> configs;
    for (double h : {0.05, 0.04})
        for (double u : {0.001, 0.002, 0.003}) {
            DataGenConfig cfg;
            cfg.id = "B1_h" + fmt(h) + "_u" + fmt(u);
            cfg.geometry = b1_geometry();
            cfg.h_max = h;
            cfg.bc.inlet_peak_velocity = u;
            cfg.snapshots = {1, 10};
            configs.push_back(cfg);
        }
    return configs;
}

namespace {

struct ConfigOutcome {
    std::vector<RunResult> runs;
    std::vector<SolveReport> reports;  // aligned with runs where executed
};

ConfigOutcome run_config(const ExperimentConfig& cfg, const MlpModel* model) {
    ConfigOutcome out;
    Problem problem;
    std::string setup_error;
    try {
        problem = cfg.make_problem();
    } catch (const std::exception& err) {
        setup_error = err.what();
    }
    for (StrategyKind kind : cfg.strategies) {
        RunResult rr;
        rr.config_id = cfg.id;
        rr.family = cfg.family;
        rr.strategy = kind;
        rr.max_iter = cfg.max_iter;
        SolveReport report;
        if (!setup_error.empty()) {
            rr.error = setup_error;
        } else if (kind == StrategyKind::Learned && !model) {
            rr.error = "learned strategy requested without a model";
        } else {
            CflStrategy strategy;
            strategy.kind = kind;
            if (kind == StrategyKind::Learned) strategy.model = model;
            SolveSettings ss;
            ss.max_iter = cfg.max_iter;
            ss.tol = cfg.tol;
            try {
                report = solve_nonlinear(problem, strategy, ss);
                rr.executed = true;
                rr.converged = report.converged;
                rr.iterations = report.iterations;
                rr.final_rel_residual =
                    report.residual_history.back() / report.residual_history.front();
            } catch (const std::exception& err) {
                rr.error = err.what();
            }
        }
        out.runs.push_back(std::move(rr));
        out.reports.push_back(std::move(report));
    }
    return out;
}

std::vector<StrategyKind> strategy_union(const SuiteResult& suite) {
    std::set<int> seen;
    for (const auto& r : suite.runs) seen.insert(static_cast<int>(r.strategy));
    std::vector<StrategyKind> order;
    for (int k : seen) order.push_back(static_cast<StrategyKind>(k));
    return order;
}

}  // namespace

void write_suite_summary(const SuiteResult& suite, const std::string& path) {
    const auto strategies = strategy_union(suite);
    std::vector<std::string> config_order;
    std::map<std::string, std::map<int, const RunResult*>> by_config;
    for (const auto& r : suite.runs) {
        if (!by_config.count(r.config_id)) config_order.push_back(r.config_id);
        by_config[r.config_id][static_cast<int>(r.strategy)] = &r;
    }

    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_suite_summary: cannot open " + path);
    f << "config_id";
    for (auto s : strategies) f << "," << to_string(s) << "_iterations," << to_string(s) << "_converged";
    f << ",winner\n";
    for (const auto& id : config_order) {
        f << id;
        const auto& row = by_config[id];
        int best = -1;
        for (auto s : strategies) {
            auto it = row.find(static_cast<int>(s));
            if (it == row.end()) {
                f << ",,";
                continue;
            }
            const RunResult& r = *it->second;
            if (!r.executed) {
                f << ",error,error";
                continue;
            }
            f << "," << r.iterations << "," << (r.converged ? 1 : 0);
            if (r.converged && (best < 0 || r.iterations < best)) best = r.iterations;
        }
        f << ",";
        bool first = true;
        if (best >= 0)
            for (auto s : strategies) {
                auto it = row.find(static_cast<int>(s));
                if (it == row.end() || !it->second->executed) continue;
                if (it->second->converged && it->second->iterations == best) {
                    if (!first) f << ";";
                    f << to_string(s);
                    first = false;
                }
            }
        f << "\n";
    }
}

void write_suite_means(const SuiteResult& suite, const std::string& path) {
    const auto strategies = strategy_union(suite);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_suite_means: cannot open " + path);
    f << "strategy,mean_iterations,n_converged,n_runs\n";
    char buf[32];
    for (auto s : strategies) {
        long sum = 0;
        int n = 0, nc = 0;
        for (const auto& r : suite.runs) {
            if (r.strategy != s || !r.executed) continue;
            sum += r.converged ? r.iterations : r.max_iter;  // non-converged plotted at the cap
            ++n;
            if (r.converged) ++nc;
        }
        std::snprintf(buf, sizeof buf, "%.17g", n > 0 ? double(sum) / n : 0.0);
        f << to_string(s) << "," << buf << "," << nc << "," << n << "\n";
    }
}

SuiteResult run_suite(const std::vector<ExperimentConfig>& configs, const MlpModel* model,
                      const std::string& out_dir, int workers) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<ConfigOutcome> outcomes(configs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            outcomes[i] = run_config(configs[i], model);
        }
    };
    const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(configs.size())));
    if (nthreads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    SuiteResult suite;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::vector<SolveReport> plotted;
        for (std::size_t k = 0; k < outcomes[i].runs.size(); ++k) {
            const RunResult& rr = outcomes[i].runs[k];
            suite.runs.push_back(rr);
            if (!rr.executed) {
                suite.all_executed = false;
                continue;
            }
            const std::string run_path =
                out_dir + "/" + rr.config_id + "_" + to_string(rr.strategy) + ".csv";
            save_report_csv(outcomes[i].reports[k], run_path);
            plotted.push_back(outcomes[i].reports[k]);
        }
        if (!plotted.empty())
            emit_convergence_plot(plotted, out_dir + "/" + configs[i].id + "_convergence.svg");
    }

    write_suite_summary(suite, out_dir + "/summary.csv");
    write_suite_means(suite, out_dir + "/means.csv");

    // ordered scatter per family
    std::set<std::string> families;
    for (const auto& r : suite.runs) families.insert(r.family);
    for (const auto& family : families) {
        const auto strategies = strategy_union(suite);
        std::vector<PlotSeries> series;
        std::vector<double> means;
        for (auto s : strategies) {
            PlotSeries ps;
            ps.label = to_string(s);
            double sum = 0.0;
            for (const auto& r : suite.runs) {
                if (r.family != family || r.strategy != s || !r.executed) continue;
                const double iters = r.converged ? r.iterations : r.max_iter;
                ps.values.push_back(iters);
                sum += iters;
            }
            if (ps.values.empty()) continue;
            std::sort(ps.values.begin(), ps.values.end());
            means.push_back(sum / ps.values.size());
            series.push_back(std::move(ps));
        }
        if (!series.empty())
            write_scatter_svg(series, means, family, out_dir + "/scatter_" + family + ".svg");
    }
    return suite;
}

namespace {

const char* kPalette[] = {"#000000", "#888888", "#bbbbbb", "#3366cc", "#cc3333", "#33aa55"};

struct Frame {
    double width = 640, height = 480;
    double left = 70, right = 20, top = 40, bottom = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const {
        return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom);
    }
};

std::string svg_header(const Frame& fr) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(fr.width) +
                    "\" height=\"" + fmt(fr.height) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return s;
}

std::string svg_axes(const Frame& fr) {
    std::string s;
    s += "<rect x=\"" + fmt(fr.left) + "\" y=\"" + fmt(fr.top) + "\" width=\"" +
         fmt(fr.width - fr.left - fr.right) + "\" height=\"" + fmt(fr.height - fr.top - fr.bottom) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    return s;
}

std::string svg_text(double x, double y, const std::string& text, const char* anchor = "middle") {
    return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"12\" text-anchor=\"" +
           anchor + "\" font-family=\"sans-serif\">" + text + "</text>\n";
}

std::string svg_legend(const Frame& fr, const std::vector<PlotSeries>& series) {
    std::string s;
    double y = fr.top + 16;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double x = fr.left + 12;
        s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y - 4) + "\" x2=\"" + fmt(x + 24) +
             "\" y2=\"" + fmt(y - 4) + "\" stroke=\"" + kPalette[i % 6] +
             "\" stroke-width=\"2\"/>\n";
        s += svg_text(x + 30, y, series[i].label, "start");
        y += 16;
    }
    return s;
}

}  // namespace

void write_convergence_svg(const std::vector<PlotSeries>& series, const std::string& path) {
    if (series.empty()) throw std::invalid_argument("write_convergence_svg: no series");
    for (const auto& s : series)
        if (s.values.empty()) throw std::invalid_argument("write_convergence_svg: empty history");

    Frame fr;
    fr.x0 = 0;
    fr.x1 = 1;
    double lo = 1e300, hi = -1e300;
    for (const auto& s : series) {
        fr.x1 = std::max(fr.x1, double(s.values.size() - 1));
        for (double v : s.values)
            if (std::isfinite(v) && v > 0.0) {
                lo = std::min(lo, std::log10(v));
                hi = std::max(hi, std::log10(v));
            }
    }
    if (lo > hi) {
        lo = -1;
        hi = 1;
    }
    fr.y0 = std::floor(lo);
    fr.y1 = std::ceil(hi);
    if (fr.y1 <= fr.y0) fr.y1 = fr.y0 + 1;

    std::string svg = svg_header(fr);
    svg += svg_axes(fr);
    const int ysteps = std::max(1, (int)std::round(fr.y1 - fr.y0));
    const int ystride = std::max(1, ysteps / 6);
    for (int k = 0; k <= ysteps; k += ystride) {
        const double yv = fr.y0 + k;
        svg += "<line x1=\"" + fmt(fr.left - 4) + "\" y1=\"" + fmt(fr.py(yv)) + "\" x2=\"" +
               fmt(fr.left) + "\" y2=\"" + fmt(fr.py(yv)) + "\" stroke=\"black\"/>\n";
        svg += svg_text(fr.left - 8, fr.py(yv) + 4, "1e" + fmt(yv), "end");
    }
    const int xticks = 5;
    for (int k = 0; k <= xticks; ++k) {
        const double xv = fr.x0 + (fr.x1 - fr.x0) * k / xticks;
        svg += "<line x1=\"" + fmt(fr.px(xv)) + "\" y1=\"" + fmt(fr.height - fr.bottom) +
               "\" x2=\"" + fmt(fr.px(xv)) + "\" y2=\"" + fmt(fr.height - fr.bottom + 4) +
               "\" stroke=\"black\"/>\n";
        svg += svg_text(fr.px(xv), fr.height - fr.bottom + 18, fmt(std::round(xv)));
    }
    svg += svg_text((fr.left + fr.width - fr.right) / 2, fr.height - 14, "iteration");
    svg += svg_text(16, fr.top - 10, "residual", "start");

    for (std::size_t i = 0; i < series.size(); ++i) {
        std::string pts;
        for (std::size_t k = 0; k < series[i].values.size(); ++k) {
            const double v = series[i].values[k];
            if (!std::isfinite(v) || v <= 0.0) continue;
            pts += fmt(fr.px(double(k))) + "," + fmt(fr.py(std::log10(v))) + " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[i % 6]) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    svg += svg_legend(fr, series);
    svg += "</svg>\n";

    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_convergence_svg: cannot open " + path);
    f << svg;
}

void emit_convergence_plot(const std::vector<SolveReport>& reports, const std::string& path) {
    if (reports.empty()) throw std::invalid_argument("emit_convergence_plot: no reports");
    std::vector<PlotSeries> series;
    for (const auto& r : reports) {
        if (r.residual_history.empty())
            throw std::invalid_argument("emit_convergence_plot: empty residual history");
        series.push_back({r.strategy_name, r.residual_history});
    }
    write_convergence_svg(series, path);
}

void write_scatter_svg(const std::vector<PlotSeries>& series, const std::vector<double>& means,
                       const std::string& title, const std::string& path) {
    if (series.empty()) throw std::invalid_argument("write_scatter_svg: no series");
    Frame fr;
    fr.x0 = 0.5;
    fr.x1 = 1.5;
    fr.y0 = 0;
    fr.y1 = 1;
    for (const auto& s : series) {
        fr.x1 = std::max(fr.x1, double(s.values.size()) + 0.5);
        for (double v : s.values) fr.y1 = std::max(fr.y1, v * 1.05);
    }

    std::string svg = svg_header(fr);
    svg += svg_axes(fr);
    svg += svg_text((fr.left + fr.width - fr.right) / 2, fr.top - 10, title);
    svg += svg_text((fr.left + fr.width - fr.right) / 2, fr.height - 14, "simulation number");
    svg += svg_text(16, fr.top - 10, "iterations", "start");
    const int yticks = 5;
    for (int k = 0; k <= yticks; ++k) {
        const double yv = fr.y0 + (fr.y1 - fr.y0) * k / yticks;
        svg += svg_text(fr.left - 8, fr.py(yv) + 4, fmt(std::round(yv)), "end");
        svg += "<line x1=\"" + fmt(fr.left - 4) + "\" y1=\"" + fmt(fr.py(yv)) + "\" x2=\"" +
               fmt(fr.left) + "\" y2=\"" + fmt(fr.py(yv)) + "\" stroke=\"black\"/>\n";
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        for (std::size_t k = 0; k < series[i].values.size(); ++k)
            svg += "<circle cx=\"" + fmt(fr.px(double(k + 1))) + "\" cy=\"" +
                   fmt(fr.py(series[i].values[k])) + "\" r=\"3\" fill=\"" +
                   std::string(kPalette[i % 6]) + "\"/>\n";
        if (i < means.size())
            svg += "<line x1=\"" + fmt(fr.px(fr.x0)) + "\" y1=\"" + fmt(fr.py(means[i])) +
                   "\" x2=\"" + fmt(fr.px(fr.x1)) + "\" y2=\"" + fmt(fr.py(means[i])) +
                   "\" stroke=\"" + std::string(kPalette[i % 6]) + "\" stroke-width=\"1.5\"/>\n";
    }
    svg += svg_legend(fr, series);
    svg += "</svg>\n";

    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_scatter_svg: cannot open " + path);
    f << svg;
}

}  // namespace ptcflow
