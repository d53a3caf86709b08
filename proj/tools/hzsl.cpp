// hzsl: hierarchical zero-shot learning pipeline driver.
//
// Subcommands: gen-synth, build-hierarchy, train, eval. Exit codes: 0 on
// success, 2 for usage or validation problems, 1 for numerical failures.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hzsl/dataset.hpp"
#include "hzsl/episodes.hpp"
#include "hzsl/hierarchy.hpp"
#include "hzsl/inference.hpp"
#include "hzsl/metrics.hpp"
#include "hzsl/model.hpp"
#include "hzsl/pipeline.hpp"
#include "hzsl/synthetic.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

hzsl::ClassHierarchy load_hierarchy_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw hzsl::validation_error("cannot open hierarchy file " + path);
    try {
        return hzsl::hierarchy_from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::exception& e) {
        throw hzsl::validation_error(path + ": " + e.what());
    }
}

hzsl::TrainConfig load_config_file(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream is(path);
    if (!is) throw hzsl::validation_error("cannot open config file " + path);
    try {
        return hzsl::config_from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::exception& e) {
        throw hzsl::validation_error(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw hzsl::validation_error("cannot open " + path + " for writing");
    os << text;
    if (!os) throw hzsl::validation_error("write failed for " + path);
}

void write_predictions_csv(const std::string& path,
                           const std::vector<hzsl::Prediction>& preds,
                           const hzsl::SemanticTable& table) {
    std::ostringstream os;
    os << "sample_id,predicted_class,distance,fallback_flag\n";
    char buf[40];
    for (std::size_t i = 0; i < preds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", preds[i].distance);
        os << i << ',' << table.names[preds[i].label] << ',' << buf << ','
           << (preds[i].candidates.used_fallback ? 1 : 0) << '\n';
    }
    write_text_file(path, os.str());
}

int cmd_gen_synth(const hzsl::SyntheticSpec& spec, const std::string& out_dir) {
    const hzsl::SyntheticData d = hzsl::gen_synthetic(spec);
    hzsl::Matrix features(d.train_features.rows() + d.test_features.rows(), spec.d_f);
    std::vector<std::size_t> labels = d.train_labels;
    for (std::size_t i = 0; i < d.train_features.rows(); ++i)
        std::copy(d.train_features.row(i).begin(), d.train_features.row(i).end(),
                  features.row(i).begin());
    for (std::size_t i = 0; i < d.test_features.rows(); ++i)
        std::copy(d.test_features.row(i).begin(), d.test_features.row(i).end(),
                  features.row(d.train_features.rows() + i).begin());
    labels.insert(labels.end(), d.test_labels.begin(), d.test_labels.end());
    hzsl::save_dataset(out_dir, d.table, features, labels);
    std::cout << "wrote " << out_dir << ": " << d.table.seen_count << " seen + "
              << d.table.unseen_count << " unseen classes, " << features.rows()
              << " samples\n";
    return 0;
}

int cmd_build_hierarchy(const std::string& data_dir, std::size_t t, std::uint64_t seed,
                        const std::string& out_path) {
    const hzsl::Dataset ds = hzsl::load_dataset(data_dir);
    const hzsl::ClassHierarchy h = hzsl::build_hierarchy(ds.table, t, seed);
    write_text_file(out_path, hzsl::hierarchy_to_json(h).dump(2) + "\n");
    std::cout << "hierarchy with " << h.n_r << " superclass layer(s), sizes [";
    for (std::size_t l = 0; l < h.layer_sizes.size(); ++l)
        std::cout << (l ? ", " : "") << h.layer_sizes[l];
    std::cout << "]\n";
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& hierarchy_path,
              const std::string& config_path, const std::string& out_path, bool tune,
              std::size_t folds) {
    const hzsl::Dataset ds = hzsl::load_dataset(data_dir);
    const hzsl::ClassHierarchy h = load_hierarchy_file(hierarchy_path);
    hzsl::TrainConfig cfg = load_config_file(config_path);

    if (tune) {
        hzsl::TuneGrid grid;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            const auto j = nlohmann::json::parse(is);
            if (j.contains("grid")) grid = hzsl::grid_from_json(j.at("grid"));
        }
        const hzsl::TuneResult best = hzsl::tune_parameters(ds, cfg, grid, folds);
        std::cout << "tuned alpha=" << best.alpha << " beta=" << best.beta
                  << " epsilon=" << best.epsilon << " (cv top-1 " << best.cv_accuracy
                  << ")\n";
        cfg.superclass.alpha = cfg.class_level.alpha = best.alpha;
        cfg.superclass.beta = cfg.class_level.beta = best.beta;
        cfg.superclass.epsilon = cfg.class_level.epsilon = best.epsilon;
    }

    const hzsl::TrainOutput out = hzsl::train_model(ds, h, cfg);
    for (std::size_t l = 0; l < out.traces.size(); ++l) {
        if (l + 1 < out.traces.size())
            std::cout << "layer " << (l + 1) << " objective trace:";
        else
            std::cout << "class level objective trace:";
        char buf[32];
        for (double v : out.traces[l]) {
            std::snprintf(buf, sizeof buf, " %.10g", v);
            std::cout << buf;
        }
        std::cout << "\n";
    }
    hzsl::save_model(out.model, out_path);
    std::cout << "wrote " << out_path << " (" << out.model.n_layers()
              << " layer + 1 class projection)\n";
    return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& model_path,
             const std::string& hierarchy_path, const std::string& mode,
             std::size_t top_k, std::size_t k_shot, std::size_t n_way,
             std::size_t episodes, double lambda, std::uint64_t seed,
             const std::string& report_path, const std::string& pred_path) {
    const hzsl::Dataset ds = hzsl::load_dataset(data_dir);
    const hzsl::ClassHierarchy h = load_hierarchy_file(hierarchy_path);
    const hzsl::ProjectionModel model = hzsl::load_model(model_path);

    nlohmann::json report;
    report["mode"] = mode;
    hzsl::EvalReport er;

    if (mode == "zsl" || mode == "gzsl") {
        const std::vector<std::size_t> rows =
            mode == "zsl" ? ds.rows_with(false)
                          : [&] {
                                std::vector<std::size_t> all(ds.labels.size());
                                for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
                                return all;
                            }();
        if (rows.empty())
            throw hzsl::validation_error("eval: no test samples for mode " + mode);
        const hzsl::Matrix f_test = ds.gather(rows);
        const std::vector<std::size_t> truth = ds.gather_labels(rows);

        std::vector<std::size_t> restrict_to;
        if (mode == "zsl") {
            if (ds.table.unseen_count == 0)
                throw hzsl::validation_error("eval: zsl mode needs unseen classes");
            for (std::size_t i = 0; i < ds.table.unseen_count; ++i)
                restrict_to.push_back(ds.table.seen_count + i);
        } else {
            restrict_to.resize(ds.table.total());
            for (std::size_t i = 0; i < restrict_to.size(); ++i) restrict_to[i] = i;
        }

        const auto preds = mode == "zsl"
                               ? hzsl::predict_zsl(model, h, f_test, ds.table, top_k)
                               : hzsl::predict_gzsl(model, h, f_test, ds.table, top_k);
        std::vector<std::size_t> labels;
        labels.reserve(preds.size());
        for (const auto& p : preds) labels.push_back(p.label);

        if (mode == "gzsl") {
            std::set<std::size_t> seen_set;
            for (std::size_t i = 0; i < ds.table.seen_count; ++i) seen_set.insert(i);
            er = hzsl::gzsl_report(labels, truth, seen_set);
        } else {
            er.top1 = hzsl::top1_accuracy(labels, truth);
            er.per_class_top1 = hzsl::per_class_accuracy(labels, truth);
            er.n_test = labels.size();
        }
        if (restrict_to.size() >= 2) {
            const auto ranks =
                hzsl::rank_labels(model, h, f_test, ds.table, restrict_to, top_k);
            er.hit_at_k_value = hzsl::hit_at_k(ranks, truth, 5);
            er.hit_k = 5;
        }
        report.update(hzsl::report_to_json(er, &ds.table.names));
        write_predictions_csv(pred_path, preds, ds.table);
    } else if (mode == "fsl") {
        const std::vector<std::size_t> rows = ds.rows_with(false);
        if (rows.empty()) throw hzsl::validation_error("eval: fsl mode needs unseen samples");
        hzsl::EpisodePool pool{ds.gather(rows), ds.gather_labels(rows)};
        const hzsl::EpisodeResult r = hzsl::fsl_episode_eval(
            model, h, ds.table, pool, n_way, k_shot, episodes, seed, lambda, top_k);
        report["fsl"] = {{"mean_accuracy", r.mean_accuracy},
                         {"ci95", r.ci95},
                         {"n_way", n_way},
                         {"k_shot", k_shot},
                         {"n_episodes", r.n_episodes}};
        std::cout << n_way << "-way " << k_shot << "-shot: " << r.mean_accuracy
                  << " +/- " << r.ci95 << " over " << r.n_episodes << " episodes\n";
    } else {
        throw hzsl::validation_error("eval: unknown mode '" + mode + "'");
    }

    write_text_file(report_path, report.dump(2) + "\n");
    if (mode != "fsl") std::cout << hzsl::report_to_table(er);
    std::cout << "wrote " << report_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical zero-shot learning toolkit"};
    app.set_version_flag("--version", std::string("hzsl ") + kVersion);
    app.require_subcommand(1);

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "generate a synthetic benchmark dataset");
    hzsl::SyntheticSpec spec;
    std::string gen_out;
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--p", spec.p, "seen class count");
    gen->add_option("--q", spec.q, "unseen class count");
    gen->add_option("--df", spec.d_f, "feature dimension");
    gen->add_option("--dz", spec.d_z, "semantic dimension");
    gen->add_option("--n", spec.n_per_class, "samples per class");
    gen->add_option("--sigma", spec.noise_sigma, "feature noise level");
    gen->add_option("--seed", spec.seed, "random seed");

    // build-hierarchy
    auto* bh = app.add_subcommand("build-hierarchy", "cluster classes into superclass layers");
    std::string bh_data, bh_out = "hierarchy.json";
    std::size_t bh_t = 5;
    std::uint64_t bh_seed = 1;
    bh->add_option("--data", bh_data, "dataset directory")->required();
    bh->add_option("--t", bh_t, "branching parameter (>= 2)");
    bh->add_option("--seed", bh_seed, "clustering seed");
    bh->add_option("--out", bh_out, "output hierarchy json path");

    // train
    auto* tr = app.add_subcommand("train", "learn per-layer and class projections");
    std::string tr_data, tr_hier, tr_config, tr_out = "model.bin";
    bool tr_tune = false;
    std::size_t tr_folds = 5;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--hierarchy", tr_hier, "hierarchy json path")->required();
    tr->add_option("--config", tr_config, "training config json");
    tr->add_option("--out", tr_out, "output model path");
    tr->add_flag("--tune", tr_tune, "grid-search alpha/beta/epsilon by class-wise CV first");
    tr->add_option("--folds", tr_folds, "cross-validation folds for --tune");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a trained model");
    std::string ev_data, ev_model, ev_hier, ev_mode;
    std::string ev_report = "report.json", ev_pred = "predictions.csv";
    std::size_t ev_topk = 3, ev_kshot = 5, ev_nway = 5, ev_episodes = 600;
    double ev_lambda = 0.5;
    std::uint64_t ev_seed = 1;
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--model", ev_model, "model path")->required();
    ev->add_option("--hierarchy", ev_hier, "hierarchy json path")->required();
    ev->add_option("--mode", ev_mode, "zsl | gzsl | fsl")->required();
    ev->add_option("--kshot", ev_kshot, "support samples per class (fsl)");
    ev->add_option("--nway", ev_nway, "classes per episode (fsl)");
    ev->add_option("--episodes", ev_episodes, "episode count (fsl)");
    ev->add_option("--lambda", ev_lambda, "support/prototype mixing weight (fsl)");
    ev->add_option("--topk", ev_topk, "superclass pruning width");
    ev->add_option("--seed", ev_seed, "episode sampling seed (fsl)");
    ev->add_option("--out", ev_report, "report json path");
    ev->add_option("--pred", ev_pred, "predictions csv path (zsl/gzsl)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_synth(spec, gen_out);
        if (bh->parsed()) return cmd_build_hierarchy(bh_data, bh_t, bh_seed, bh_out);
        if (tr->parsed())
            return cmd_train(tr_data, tr_hier, tr_config, tr_out, tr_tune, tr_folds);
        if (ev->parsed())
            return cmd_eval(ev_data, ev_model, ev_hier, ev_mode, ev_topk, ev_kshot,
                            ev_nway, ev_episodes, ev_lambda, ev_seed, ev_report, ev_pred);
    } catch (const hzsl::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hzsl::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
