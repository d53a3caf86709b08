#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hzsl/matrix.hpp"
#include "hzsl/projection.hpp"

namespace hzsl {

/// Learned projections: one d_f×d_z matrix per superclass layer plus the
/// class-level matrix, together with the hyperparameters they were trained
/// with and the final updated semantic matrices.
struct ProjectionModel {
    std::vector<Matrix> layer_w;           // layer 1 .. n_r
    Matrix class_w;                        // class-level projection
    std::vector<LayerParams> params_used;  // per layer
    LayerParams class_params;
    std::vector<Matrix> final_layer_e;     // updated Ẽ per layer (not serialised)
    Matrix final_class_e;                  // updated Z̃ (not serialised)

    std::size_t n_layers() const { return layer_w.size(); }
    std::size_t d_f() const { return class_w.rows(); }
    std::size_t d_z() const { return class_w.cols(); }

    void validate() const {
        if (class_w.empty()) throw validation_error("model: missing class projection");
        for (const Matrix& w : layer_w)
            if (w.rows() != d_f() || w.cols() != d_z())
                throw validation_error("model: layer projection shape mismatch");
        if (!class_w.all_finite())
            throw validation_error("model: non-finite class projection");
        for (const Matrix& w : layer_w)
            if (!w.all_finite()) throw validation_error("model: non-finite projection");
    }
};

namespace detail {

inline void put_u32le(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

inline void put_f64le(std::ostream& os, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

inline std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

inline nlohmann::json params_to_json(const LayerParams& p) {
    return {{"alpha", p.alpha},       {"beta", p.beta},
            {"epsilon", p.epsilon},   {"gamma", p.gamma},
            {"max_iters", p.max_iters}, {"rel_tol", p.rel_tol}};
}

inline LayerParams params_from_json(const nlohmann::json& j) {
    LayerParams p;
    p.alpha = j.value("alpha", p.alpha);
    p.beta = j.value("beta", p.beta);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.gamma = j.value("gamma", p.gamma);
    p.max_iters = j.value("max_iters", p.max_iters);
    p.rel_tol = j.value("rel_tol", p.rel_tol);
    return p;
}

}  // namespace detail

inline constexpr char kModelMagic[8] = {'H', 'Z', 'S', 'L', 'P', 'M', '0', '1'};

/// Binary model file: magic "HZSLPM01", little-endian u32 (n_r, d_f, d_z),
/// then each projection matrix row-major as little-endian f64 — layer
/// matrices first, the class-level matrix last. A JSON sidecar at
/// `path + ".json"` carries the hyperparameters.
inline void save_model(const ProjectionModel& m, const std::string& path) {
    m.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw validation_error("save_model: cannot open " + path);
    os.write(kModelMagic, 8);
    detail::put_u32le(os, static_cast<std::uint32_t>(m.n_layers()));
    detail::put_u32le(os, static_cast<std::uint32_t>(m.d_f()));
    detail::put_u32le(os, static_cast<std::uint32_t>(m.d_z()));
    for (const Matrix& w : m.layer_w)
        for (std::size_t i = 0; i < w.size(); ++i) detail::put_f64le(os, w.data()[i]);
    for (std::size_t i = 0; i < m.class_w.size(); ++i)
        detail::put_f64le(os, m.class_w.data()[i]);
    if (!os) throw validation_error("save_model: write failed for " + path);

    nlohmann::json side;
    side["n_r"] = m.n_layers();
    side["d_f"] = m.d_f();
    side["d_z"] = m.d_z();
    auto layers = nlohmann::json::array();
    for (const LayerParams& p : m.params_used) layers.push_back(detail::params_to_json(p));
    side["layer_params"] = std::move(layers);
    side["class_params"] = detail::params_to_json(m.class_params);
    std::ofstream js(path + ".json", std::ios::trunc);
    if (!js) throw validation_error("save_model: cannot open sidecar for " + path);
    js << side.dump(2) << "\n";
}

inline ProjectionModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw validation_error("load_model: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || !std::equal(magic, magic + 8, kModelMagic))
        throw validation_error("load_model: bad magic in " + path);
    const std::uint32_t n_r = detail::get_u32le(is);
    const std::uint32_t df = detail::get_u32le(is);
    const std::uint32_t dz = detail::get_u32le(is);
    if (!is || df == 0 || dz == 0)
        throw validation_error("load_model: corrupt header in " + path);

    ProjectionModel m;
    for (std::uint32_t l = 0; l < n_r; ++l) {
        Matrix w(df, dz);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = detail::get_f64le(is);
        m.layer_w.push_back(std::move(w));
    }
    m.class_w = Matrix(df, dz);
    for (std::size_t i = 0; i < m.class_w.size(); ++i)
        m.class_w.data()[i] = detail::get_f64le(is);
    if (!is) throw validation_error("load_model: truncated file " + path);
    m.validate();

    std::ifstream js(path + ".json");
    if (js) {
        try {
            const auto side = nlohmann::json::parse(js);
            for (const auto& pj : side.value("layer_params", nlohmann::json::array()))
                m.params_used.push_back(detail::params_from_json(pj));
            if (side.contains("class_params"))
                m.class_params = detail::params_from_json(side.at("class_params"));
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("load_model: bad sidecar: ") + e.what());
        }
    }
    return m;
}

}  // namespace hzsl
