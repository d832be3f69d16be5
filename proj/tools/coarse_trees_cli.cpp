// Command-line front end: classification, ball and lamination exports, the
// line-by-line quasi-isometry construction, warped-metric comparison, and the
// commensurability / HNN invariants. File-based and batch-only; every
// artifact embeds the invoking configuration and seed.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "coarse_trees/coarse_trees.hpp"
#include "coarse_trees/warped_metric.hpp"

namespace ct = coarse_trees;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string command;
    std::vector<std::string> inputs;
    std::uint32_t depth = 6;
    double beta = 0.2;
    double beta2 = 0.2;
    double window_k = 6.0;
    std::uint64_t samples = 500;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "json";
    bool solvable = false;
    std::string bs_pairs;

    json provenance() const {
        json j;
        j["tool"] = "coarse-trees";
        j["command"] = command;
        j["inputs"] = inputs;
        j["depth"] = depth;
        j["beta"] = beta;
        j["beta2"] = beta2;
        j["window_k"] = window_k;
        j["samples"] = samples;
        j["seed"] = seed;
        j["format"] = format;
        return j;
    }

    std::string provenance_line() const { return provenance().dump(); }
};

void write_text(const RunConfig& cfg, const std::string& name, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        return;
    }
    std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    std::cerr << "wrote " << (dir / name).string() << "\n";
}

json with_provenance(const RunConfig& cfg, json j) {
    j["config"] = cfg.provenance();
    return j;
}

int run_classify(const RunConfig& cfg) {
    const ct::GraphOfZs g = ct::load_graph(cfg.inputs[0]);
    const ct::ReduceResult red = ct::reduce_graph_traced(g);
    for (const auto& step : red.steps) {
        std::cout << "reduce: contracted edge " << step.edge_in_current_graph << " merging \""
                  << step.absorbed_label << "\" into \"" << step.surviving_label
                  << "\" (index scale " << step.scale << ")\n";
    }
    const ct::ClassLabel label = ct::classify(g);
    std::cout << label.to_string() << "\n";
    return 0;
}

int run_ball(const RunConfig& cfg) {
    const ct::GraphOfZs g = ct::load_graph(cfg.inputs[0]);
    const ct::TreeBall ball = ct::build_ball(g, 0, cfg.depth);
    if (cfg.format == "dot") {
        write_text(cfg, "ball.dot", "// " + cfg.provenance_line() + "\n" + ct::ball_to_dot(ball));
    } else {
        write_text(cfg, "ball.json",
                   with_provenance(cfg, ct::ball_to_json(ball)).dump(2) + "\n");
    }
    return 0;
}

int run_homogenize(const RunConfig& cfg) {
    const ct::GraphOfZs g = ct::load_graph(cfg.inputs[0]);
    const ct::GraphOfZs r = ct::reduce_graph(g);
    const ct::LocalType t = ct::homogenize(r);
    write_text(cfg, "local_type.json", with_provenance(cfg, ct::local_type_to_json(t)).dump(2) + "\n");
    return 0;
}

int run_laminate(const RunConfig& cfg) {
    const ct::LocalType t = ct::load_local_type(cfg.inputs[0]);
    ct::LazyTree tree(t);
    const ct::Lamination lam = ct::build_lamination(tree, cfg.beta, cfg.depth);
    if (cfg.format == "dot") {
        write_text(cfg, "lamination.dot",
                   "// " + cfg.provenance_line() + "\n" + ct::lamination_to_dot(tree, lam));
    } else {
        write_text(cfg, "lamination.json",
                   with_provenance(cfg, ct::lamination_to_json(tree, lam)).dump(2) + "\n");
    }
    return 0;
}

int run_qi_build(const RunConfig& cfg) {
    const ct::LocalType t1 = ct::load_local_type(cfg.inputs[0]);
    const ct::LocalType t2 = ct::load_local_type(cfg.inputs[1]);
    ct::QiBuildConfig qcfg;
    qcfg.beta1 = cfg.beta;
    qcfg.beta2 = cfg.beta2;
    qcfg.window_k = cfg.window_k;
    qcfg.depth = cfg.depth;
    ct::QiBuild b = ct::build_qi(t1, t2, qcfg);

    std::vector<ct::QiSample> rows;
    ct::QiReport rep =
        ct::measure_qi_report(*b.source_tree, *b.target_tree, b.map, cfg.samples, cfg.seed, &rows);
    rep.ladder_k = b.iso.realized_k;

    write_text(cfg, "qi_report.json", with_provenance(cfg, ct::qi_report_to_json(rep)).dump(2) + "\n");
    if (!cfg.out.empty()) {
        write_text(cfg, "qi_samples.csv", ct::qi_samples_to_csv(rows, cfg.provenance_line()));
        write_text(cfg, "qi_map.csv", ct::qi_map_to_csv(b.map, cfg.provenance_line()));
    }
    return 0;
}

int run_metric_compare(const RunConfig& cfg) {
    const ct::GraphOfZs g = ct::load_graph(cfg.inputs[0]);
    const ct::TreeBall ball = ct::build_ball(g, 0, cfg.depth);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, ball.size() - 1);
    std::uniform_real_distribution<double> logdx(0.0, 10.0);

    std::ostringstream csv;
    csv << "# " << cfg.provenance_line() << "\n";
    csv << "t1,x1,t2,x2,approx,oracle,ratio\n";
    for (std::uint64_t i = 0; i < cfg.samples; ++i) {
        const ct::WarpedPoint p{pick(rng), 0.0};
        const ct::WarpedPoint q{pick(rng), std::exp(logdx(rng))};
        const double a = ct::approx_distance(ball, p, q);
        const double o = ct::oracle_distance(ball, p, q, ball.size());
        csv << p.t << ',' << ct::fmt_double(p.x) << ',' << q.t << ',' << ct::fmt_double(q.x) << ','
            << ct::fmt_double(a) << ',' << ct::fmt_double(o) << ','
            << ct::fmt_double((o + 1.0) / (a + 1.0)) << "\n";
    }
    write_text(cfg, "metric_compare.csv", csv.str());
    return 0;
}

int run_invariants(const RunConfig& cfg) {
    json out;
    if (!cfg.bs_pairs.empty()) {
        std::int64_t a, b, c, d;
        char comma;
        std::istringstream ss(cfg.bs_pairs);
        if (!(ss >> a >> comma >> b >> comma >> c >> comma >> d)) {
            throw ct::Error(ct::ErrorCode::BadInput, "--bs expects a,b,c,d");
        }
        const bool separated = ct::bs_not_commensurable(a, b, c, d);
        out["bs"] = {{"pair1", {a, b}},
                     {"pair2", {c, d}},
                     {"not_commensurable", separated},
                     {"classify1", ct::classify(ct::make_bs(a, b)).to_string()},
                     {"classify2", ct::classify(ct::make_bs(c, d)).to_string()}};
        std::cout << (separated ? "not commensurable" : "no obstruction") << "\n";
    }
    if (cfg.inputs.size() == 2) {
        const ct::RationalMatrix m1 = ct::load_matrix(cfg.inputs[0]);
        const ct::RationalMatrix m2 = ct::load_matrix(cfg.inputs[1]);
        const ct::HnnQiResult r = ct::hnn_qi_equivalent(m1, m2, cfg.solvable);
        json jr;
        switch (r.verdict) {
            case ct::HnnQiResult::Verdict::Equivalent: jr["verdict"] = "equivalent"; break;
            case ct::HnnQiResult::Verdict::NotEquivalent: jr["verdict"] = "not_equivalent"; break;
            case ct::HnnQiResult::Verdict::Advisory: jr["verdict"] = "advisory"; break;
        }
        if (r.alpha) jr["alpha"] = *r.alpha;
        if (r.alpha_rational) jr["alpha_rational"] = {r.alpha_rational->num, r.alpha_rational->den};
        if (!r.note.empty()) jr["note"] = r.note;
        jr["abs_jordan_1"] = ct::abs_jordan_to_json(ct::abs_jordan_form(m1));
        jr["abs_jordan_2"] = ct::abs_jordan_to_json(ct::abs_jordan_form(m2));
        out["hnn"] = jr;
        std::cout << jr["verdict"].get<std::string>();
        if (r.alpha) std::cout << " alpha=" << ct::fmt_double(*r.alpha);
        std::cout << "\n";
    }
    if (out.empty()) {
        throw ct::Error(ct::ErrorCode::BadInput, "invariants needs --bs or two matrix files");
    }
    if (!cfg.out.empty()) {
        write_text(cfg, "invariants.json", with_provenance(cfg, out).dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"computational geometry of graphs of Z's and coarsely oriented trees"};
    app.require_subcommand(1);
    RunConfig cfg;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--depth", cfg.depth, "tree/ball radius");
        sub->add_option("--beta", cfg.beta, "lamination slope");
        sub->add_option("--beta2", cfg.beta2, "target lamination slope");
        sub->add_option("--window-k", cfg.window_k, "edge height matching tolerance K");
        sub->add_option("--samples", cfg.samples, "measurement sample count");
        sub->add_option("--seed", cfg.seed, "random seed recorded in artifacts");
        sub->add_option("--out", cfg.out, "output directory (default: stdout)");
        sub->add_option("--format", cfg.format, "output format: json, dot or csv")
            ->check(CLI::IsMember({"json", "dot", "csv"}));
    };

    CLI::App* classify = app.add_subcommand("classify", "classify a graph of Z's");
    classify->add_option("graph", cfg.inputs, "graph JSON file")->required();
    add_common(classify);

    CLI::App* ball = app.add_subcommand("ball", "materialize a covering-tree ball");
    ball->add_option("graph", cfg.inputs, "graph JSON file")->required();
    add_common(ball);

    CLI::App* homog = app.add_subcommand("homogenize", "local type of the collapsed lift tree");
    homog->add_option("graph", cfg.inputs, "graph JSON file")->required();
    add_common(homog);

    CLI::App* lam = app.add_subcommand("laminate", "constant-slope lamination of a homogeneous tree");
    lam->add_option("local_type", cfg.inputs, "local type JSON file")->required();
    add_common(lam);

    CLI::App* qi = app.add_subcommand("qi-build", "line-by-line quasi-isometry between two trees");
    qi->add_option("local_types", cfg.inputs, "two local type JSON files")->expected(2);
    add_common(qi);

    CLI::App* metric = app.add_subcommand("metric-compare", "warped metric estimate vs oracle");
    metric->add_option("graph", cfg.inputs, "graph JSON file")->required();
    add_common(metric);

    CLI::App* inv = app.add_subcommand("invariants", "commensurability and HNN invariants");
    inv->add_option("matrices", cfg.inputs, "two matrix JSON files")->expected(0, 2);
    inv->add_option("--bs", cfg.bs_pairs, "two index pairs a,b,c,d");
    inv->add_flag("--solvable", cfg.solvable, "require a rational power");
    add_common(inv);

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify->parsed()) {
            cfg.command = "classify";
            return run_classify(cfg);
        }
        if (ball->parsed()) {
            cfg.command = "ball";
            return run_ball(cfg);
        }
        if (homog->parsed()) {
            cfg.command = "homogenize";
            return run_homogenize(cfg);
        }
        if (lam->parsed()) {
            cfg.command = "laminate";
            return run_laminate(cfg);
        }
        if (qi->parsed()) {
            cfg.command = "qi-build";
            if (cfg.inputs.size() != 2) {
                throw ct::Error(ct::ErrorCode::BadInput, "qi-build needs two local type files");
            }
            return run_qi_build(cfg);
        }
        if (metric->parsed()) {
            cfg.command = "metric-compare";
            return run_metric_compare(cfg);
        }
        if (inv->parsed()) {
            cfg.command = "invariants";
            return run_invariants(cfg);
        }
    } catch (const ct::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
