#include "deuce/deuce.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_proportions(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw deuce::Error("invalid proportions: cannot parse '" + item + "'", "synth");
        }
    }
    return out;
}

std::uint64_t env_seed(std::uint64_t fallback) {
    if (const char* env = std::getenv("DEUCE_SEED")) {
        char* end = nullptr;
        auto v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') return v;
    }
    return fallback;
}

void write_text(const std::string& path, const std::string& text, const char* stage) {
    deuce::run_stage(stage, [&] { deuce::write_file(path, text); });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cold-start seed-set selection over document embeddings"};
    app.require_subcommand(1);

    deuce::PipelineConfig cfg;
    cfg.rng_seed = env_seed(0);
    std::string bundle_path, out_path, report_path, strategy = "deuce";
    auto* select = app.add_subcommand("select", "Select a seed set from an embedding bundle");
    select->add_option("--bundle", bundle_path, "Input bundle")->required();
    select->add_option("--out", out_path, "Selection record (JSON)")->required();
    select->add_option("--report", report_path, "Report path (default <out>.report.json when gold labels exist)");
    select->add_option("--b", cfg.b, "Labeling budget")->required();
    select->add_option("--k", cfg.k, "Neighbors per kNN graph")->capture_default_str();
    select->add_option("--k_r", cfg.k_r, "Minimum cluster size")->capture_default_str();
    select->add_option("--gamma", cfg.gamma, "Dual-edge boost")->capture_default_str();
    select->add_option("--n_starts", cfg.n_starts, "Number of top-degree FPS starts")->capture_default_str();
    select->add_option("--rng_seed", cfg.rng_seed, "Run seed (env DEUCE_SEED)")->capture_default_str();
    select->add_option("--strategy", strategy, "deuce | random | entropy | coreset")->capture_default_str();
    select->add_flag("--randomize_predictions", cfg.randomize_predictions, "Replace predictive embeddings by noise");
    select->add_option("--threads", cfg.threads, "Worker threads (env DEUCE_THREADS)");

    deuce::SyntheticSpec spec;
    spec.rng_seed = env_seed(0);
    std::string proportions, synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled bundle");
    synth->add_option("--n_docs", spec.n_docs)->required();
    synth->add_option("--n_classes", spec.n_classes)->required();
    synth->add_option("--dim", spec.dim)->required();
    synth->add_option("--class_proportions", proportions, "Comma-separated, default uniform");
    synth->add_option("--cluster_spread", spec.cluster_spread)->capture_default_str();
    synth->add_option("--rng_seed", spec.rng_seed)->capture_default_str();
    synth->add_option("--out", synth_out)->required();

    std::string m_bundle, m_selection, m_out;
    auto* metrics = app.add_subcommand("metrics", "IMB and diversity of a selection");
    metrics->add_option("--bundle", m_bundle)->required();
    metrics->add_option("--selection", m_selection)->required();
    metrics->add_option("--out", m_out, "Machine-readable report (JSON)");

    std::string g_bundle, g_out, g_kind = "dng";
    deuce::PipelineConfig gcfg;
    auto* dump = app.add_subcommand("dump-graph", "Write a graph or cluster table for inspection");
    dump->add_option("--bundle", g_bundle)->required();
    dump->add_option("--graph", g_kind, "textual | label | dng | clusters")->capture_default_str();
    dump->add_option("--k", gcfg.k)->capture_default_str();
    dump->add_option("--k_r", gcfg.k_r)->capture_default_str();
    dump->add_option("--gamma", gcfg.gamma)->capture_default_str();
    dump->add_option("--out", g_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*select) {
            cfg.strategy = deuce::run_stage("config", [&] { return deuce::parse_strategy(strategy); });
            const auto bundle = deuce::run_stage("load", [&] { return deuce::load_bundle(bundle_path); });
            if (bundle.renormalized) std::cerr << "warning: bundle rows were renormalized on load\n";
            const auto out = deuce::run_pipeline(bundle, cfg);
            for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
            deuce::run_stage("write", [&] { deuce::save_selection(out.result, out_path); });
            if (out.report) {
                if (report_path.empty()) report_path = out_path + ".report.json";
                auto j = deuce::report_to_json(*out.report);
                j["config"] = out.result.config_echo;
                write_text(report_path, j.dump(2) + "\n", "write");
                deuce::print_report(*out.report, bundle.class_names, std::cout);
            }
            std::cout << "selected " << out.result.selected.size() << " documents -> " << out_path << '\n';
        } else if (*synth) {
            spec.class_proportions = proportions.empty()
                                         ? std::vector<double>(spec.n_classes, 1.0 / static_cast<double>(spec.n_classes))
                                         : parse_proportions(proportions);
            const auto b = deuce::run_stage("synth", [&] { return deuce::generate_synthetic(spec); });
            deuce::run_stage("write", [&] { deuce::save_bundle(b, synth_out); });
            std::cout << "wrote " << b.n_docs() << " documents -> " << synth_out << '\n';
        } else if (*metrics) {
            const auto bundle = deuce::run_stage("load", [&] { return deuce::load_bundle(m_bundle); });
            const auto sel = deuce::run_stage("load", [&] { return deuce::load_selection(m_selection); });
            if (sel.n_docs != bundle.n_docs()) {
                throw deuce::Error("selection was made over " + std::to_string(sel.n_docs) + " documents, bundle has " +
                                       std::to_string(bundle.n_docs()),
                                   "metrics");
            }
            deuce::Json j;
            j["b"] = sel.selected.size();
            deuce::SelectionReport rep;
            rep.b = sel.selected.size();
            if (bundle.gold_labels) {
                std::vector<deuce::Index> labs;
                for (auto s : sel.selected) labs.push_back((*bundle.gold_labels)[s]);
                rep.class_counts = deuce::class_counts(labs, bundle.n_classes());
                rep.imb = deuce::imbalance_from_counts(rep.class_counts);
                j["imb"] = deuce::number_to_json(rep.imb);
                j["class_counts"] = rep.class_counts;
            } else {
                std::cerr << "notice: bundle has no gold labels; IMB omitted\n";
            }
            rep.diversity = deuce::run_stage("metrics", [&] {
                return bundle.reference ? deuce::diversity(*bundle.reference, sel.selected)
                                        : deuce::diversity(bundle.textual, sel.selected);
            });
            j["diversity"] = deuce::number_to_json(rep.diversity);
            if (bundle.gold_labels) {
                deuce::print_report(rep, bundle.class_names, std::cout);
            } else {
                std::cout << "b          " << rep.b << "\ndiversity  " << deuce::format_metric(rep.diversity) << '\n';
            }
            if (!m_out.empty()) write_text(m_out, j.dump(2) + "\n", "write");
        } else if (*dump) {
            const auto bundle = deuce::run_stage("load", [&] { return deuce::load_bundle(g_bundle); });
            const std::size_t k = std::min(gcfg.k, bundle.n_docs() - 1);
            const auto art = deuce::build_artifacts(bundle, k, gcfg.k_r, gcfg.gamma);
            std::ostringstream ss;
            if (g_kind == "textual") {
                deuce::dump_edges(art.textual_graph, ss);
            } else if (g_kind == "label") {
                deuce::dump_edges(art.label_graph, ss);
            } else if (g_kind == "dng") {
                deuce::dump_edges(art.dng, ss);
            } else if (g_kind == "clusters") {
                deuce::dump_clusters(art.clusters, bundle.doc_ids, ss);
            } else {
                throw deuce::Error("unknown graph '" + g_kind + "'", "config");
            }
            write_text(g_out, ss.str(), "write");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
