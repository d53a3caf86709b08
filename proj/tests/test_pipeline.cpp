#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hzsl/dataset.hpp"
#include "hzsl/model.hpp"
#include "hzsl/pipeline.hpp"
#include "hzsl/synthetic.hpp"
#include "support/random_fixtures.hpp"

using namespace hzsl;

namespace {

std::string temp_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / ("hzsl_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

Dataset dataset_from(const SyntheticData& d, bool include_test = true) {
    Dataset ds;
    ds.table = d.table;
    const std::size_t n_tr = d.train_features.rows();
    const std::size_t n_te = include_test ? d.test_features.rows() : 0;
    ds.features = Matrix(n_tr + n_te, d.train_features.cols());
    for (std::size_t i = 0; i < n_tr; ++i)
        std::copy(d.train_features.row(i).begin(), d.train_features.row(i).end(),
                  ds.features.row(i).begin());
    for (std::size_t i = 0; i < n_te; ++i)
        std::copy(d.test_features.row(i).begin(), d.test_features.row(i).end(),
                  ds.features.row(n_tr + i).begin());
    ds.labels = d.train_labels;
    if (include_test)
        ds.labels.insert(ds.labels.end(), d.test_labels.begin(), d.test_labels.end());
    return ds;
}

SyntheticData small_synth(double sigma = 0.0, std::uint64_t seed = 3) {
    SyntheticSpec spec;
    spec.p = 10;
    spec.q = 4;
    spec.d_f = 8;
    spec.d_z = 5;
    spec.n_per_class = 5;
    spec.noise_sigma = sigma;
    spec.seed = seed;
    return gen_synthetic(spec);
}

}  // namespace

TEST_CASE("config json round trip and validation") {
    TrainConfig cfg;
    cfg.superclass.alpha = 0.3;
    cfg.class_level.epsilon = 0.0;
    cfg.graph_k = 7;
    cfg.top_k = 2;
    const TrainConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.superclass.alpha == 0.3);
    CHECK(back.class_level.epsilon == 0.0);
    CHECK(back.graph_k == 7);
    CHECK(back.top_k == 2);

    nlohmann::json bad = config_to_json(cfg);
    bad["superclass"]["alpha"] = 2.0;
    CHECK_THROWS_AS(config_from_json(bad), validation_error);
    bad = config_to_json(cfg);
    bad["fsl_lambda"] = -0.5;
    CHECK_THROWS_AS(config_from_json(bad), validation_error);

    // a config carrying only the superclass block mirrors it at class level
    nlohmann::json partial;
    partial["superclass"] = {{"alpha", 0.25}, {"beta", 0.5}, {"epsilon", 0.0},
                             {"gamma", 0.01}};
    const TrainConfig mirrored = config_from_json(partial);
    CHECK(mirrored.class_level.alpha == 0.25);
}

TEST_CASE("train_model produces per-layer traces and shares the parameter triple") {
    const SyntheticData d = small_synth();
    const ClassHierarchy h = build_hierarchy(d.table, 3, 1);
    REQUIRE(h.n_r >= 1);
    Dataset ds = dataset_from(d, false);
    TrainConfig cfg;
    cfg.superclass.epsilon = 0.01;
    cfg.class_level.epsilon = 0.01;
    cfg.graph_k = 5;
    const TrainOutput out = train_model(ds, h, cfg);

    CHECK(out.model.layer_w.size() == h.n_r);
    CHECK(out.model.class_w.rows() == 8);
    CHECK(out.model.class_w.cols() == 5);
    CHECK(out.traces.size() == h.n_r + 1);
    for (const auto& trace : out.traces) {
        REQUIRE(!trace.empty());
        for (std::size_t k = 0; k + 1 < trace.size(); ++k)
            CHECK(trace[k + 1] <= trace[k] * (1.0 + 1e-9));
    }
    // every superclass layer reuses the identical parameter triple
    for (const LayerParams& p : out.model.params_used) {
        CHECK(p.alpha == cfg.superclass.alpha);
        CHECK(p.beta == cfg.superclass.beta);
        CHECK(p.epsilon == cfg.superclass.epsilon);
    }
}

TEST_CASE("class projection on raw noiseless features recovers the planted map") {
    const SyntheticData d = small_synth();
    Matrix z(d.train_labels.size(), d.table.dim());
    for (std::size_t i = 0; i < d.train_labels.size(); ++i)
        std::copy(d.table.vectors.row(d.train_labels[i]).begin(),
                  d.table.vectors.row(d.train_labels[i]).end(), z.row(i).begin());
    LayerParams p;
    p.epsilon = 0.0;
    const LearnResult r = learn_class_projection(d.train_features, z, nullptr, p);
    const double err =
        frobenius_norm(d.train_features * r.w - z) / frobenius_norm(z);
    CHECK(err <= 1e-2);
}

TEST_CASE("training is insensitive to the graph when epsilon is zero") {
    const SyntheticData d = small_synth();
    const ClassHierarchy h = build_hierarchy(d.table, 3, 1);
    Dataset ds = dataset_from(d, false);
    TrainConfig cfg;
    cfg.superclass.epsilon = 0.0;
    cfg.class_level.epsilon = 0.0;
    cfg.graph_k = 200;  // invalid for this sample count, but unused
    const TrainOutput out = train_model(ds, h, cfg);
    CHECK(out.model.class_w.all_finite());
}

TEST_CASE("sample cap subsampling is deterministic and balanced") {
    const SyntheticData d = small_synth();
    const ClassHierarchy h = build_hierarchy(d.table, 3, 1);
    Dataset ds = dataset_from(d, false);
    TrainConfig cfg;
    cfg.superclass.epsilon = 0.0;
    cfg.class_level.epsilon = 0.0;
    cfg.graph_sample_cap = 20;  // 10 classes * 5 samples -> 2 per class
    const TrainOutput a = train_model(ds, h, cfg);
    const TrainOutput b = train_model(ds, h, cfg);
    CHECK(a.model.class_w == b.model.class_w);
}

TEST_CASE("model binary round trip is exact, sidecar carries hyperparameters") {
    const SyntheticData d = small_synth();
    const ClassHierarchy h = build_hierarchy(d.table, 3, 1);
    Dataset ds = dataset_from(d, false);
    TrainConfig cfg;
    cfg.superclass.epsilon = 0.0;
    cfg.class_level.epsilon = 0.0;
    cfg.class_level.alpha = 0.35;
    const TrainOutput out = train_model(ds, h, cfg);

    const std::string dir = temp_dir("model_io");
    const std::string path = dir + "/model.bin";
    save_model(out.model, path);
    const ProjectionModel back = load_model(path);
    REQUIRE(back.layer_w.size() == out.model.layer_w.size());
    for (std::size_t l = 0; l < back.layer_w.size(); ++l)
        CHECK(back.layer_w[l] == out.model.layer_w[l]);
    CHECK(back.class_w == out.model.class_w);
    CHECK(back.class_params.alpha == 0.35);

    // header sanity: magic + shape
    std::ifstream is(path, std::ios::binary);
    char magic[8];
    is.read(magic, 8);
    CHECK(std::string(magic, 8) == "HZSLPM01");

    CHECK_THROWS_AS(load_model(dir + "/nothing.bin"), validation_error);
    {
        std::ofstream bad(dir + "/bad.bin", std::ios::binary);
        bad << "NOTMAGIC" << std::string(12, '\0');
    }
    CHECK_THROWS_AS(load_model(dir + "/bad.bin"), validation_error);
}

TEST_CASE("dataset files round trip through the directory layout") {
    const SyntheticData d = small_synth(0.02);
    Dataset ds = dataset_from(d);
    const std::string dir = temp_dir("dataset_io");
    save_dataset(dir, ds.table, ds.features, ds.labels);
    const Dataset back = load_dataset(dir);
    CHECK(back.table.names == ds.table.names);
    CHECK(back.table.seen_count == ds.table.seen_count);
    CHECK(back.table.vectors == ds.table.vectors);  // %.17g round-trips exactly
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
}

TEST_CASE("dataset loader reports inconsistencies by file") {
    const SyntheticData d = small_synth();
    Dataset ds = dataset_from(d);
    const std::string dir = temp_dir("dataset_bad");
    save_dataset(dir, ds.table, ds.features, ds.labels);

    SUBCASE("label missing from the split") {
        std::ofstream os(dir + "/labels.txt", std::ios::app);
        os << "no_such_class\n";
        os.close();
        std::ofstream fs(dir + "/features.csv", std::ios::app);
        for (std::size_t j = 0; j < ds.features.cols(); ++j) fs << (j ? ",0" : "0");
        fs << "\n";
        fs.close();
        CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(dir)),
                             doctest::Contains("no_such_class"), validation_error);
    }
    SUBCASE("semantics row count must match the split") {
        std::ofstream os(dir + "/semantics.csv", std::ios::app);
        for (std::size_t j = 0; j < ds.table.dim(); ++j) os << (j ? ",1" : "1");
        os << "\n";
        os.close();
        CHECK_THROWS_AS(static_cast<void>(load_dataset(dir)), validation_error);
    }
    SUBCASE("malformed csv is rejected") {
        std::ofstream os(dir + "/features.csv", std::ios::app);
        os << "1,2,oops\n";
        os.close();
        CHECK_THROWS_AS(static_cast<void>(load_dataset(dir)), validation_error);
    }
}

TEST_CASE("grid search picks a sensible triple on planted data") {
    const SyntheticData d = small_synth();
    Dataset ds = dataset_from(d, false);
    TrainConfig base;
    base.seed = 5;
    TuneGrid grid;
    grid.alphas = {0.2, 0.5};
    grid.betas = {0.5};
    grid.epsilons = {0.0};
    const TuneResult r = tune_parameters(ds, base, grid, 5);
    CHECK(r.cv_accuracy > 0.8);  // planted noiseless folds classify cleanly
    CHECK((r.alpha == 0.2 || r.alpha == 0.5));
    CHECK(r.beta == 0.5);
    CHECK(r.epsilon == 0.0);

    CHECK_THROWS_AS(tune_parameters(ds, base, grid_from_json({{"alphas", {}}}), 5),
                    validation_error);
}
