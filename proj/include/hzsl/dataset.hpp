#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "hzsl/matrix.hpp"
#include "hzsl/semantic_table.hpp"

namespace hzsl {

/// On-disk dataset layout inside one directory:
///   features.csv   headerless CSV, one sample per row
///   labels.txt     one class name per sample line
///   semantics.csv  headerless CSV, one class per row, ordered as the split
///                  lists the seen names followed by the unseen names
///   split.json     {"seen": [names...], "unseen": [names...]}
struct DatasetFiles {
    std::string features_path;
    std::string labels_path;
    std::string semantics_path;
    std::string split_path;

    static DatasetFiles in_dir(const std::string& dir) {
        namespace fs = std::filesystem;
        const fs::path d(dir);
        return {(d / "features.csv").string(), (d / "labels.txt").string(),
                (d / "semantics.csv").string(), (d / "split.json").string()};
    }
};

struct Dataset {
    SemanticTable table;
    Matrix features;                  // all samples, train and test together
    std::vector<std::size_t> labels;  // table index per sample

    std::vector<std::size_t> rows_with(bool seen) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (table.is_seen(labels[i]) == seen) out.push_back(i);
        return out;
    }

    Matrix gather(const std::vector<std::size_t>& rows) const {
        Matrix out(rows.size(), features.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto src = features.row(rows[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    std::vector<std::size_t> gather_labels(const std::vector<std::size_t>& rows) const {
        std::vector<std::size_t> out;
        out.reserve(rows.size());
        for (std::size_t r : rows) out.push_back(labels[r]);
        return out;
    }
};

inline Matrix load_csv_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open " + path);
    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t here = 0;
        const char* p = line.c_str();
        char* end = nullptr;
        while (true) {
            const double v = std::strtod(p, &end);
            if (end == p) throw validation_error(path + ": malformed number in row " +
                                                 std::to_string(rows));
            values.push_back(v);
            ++here;
            p = end;
            while (*p == ' ' || *p == '\t') ++p;
            if (*p == ',') {
                ++p;
                continue;
            }
            if (*p == '\0' || *p == '\r') break;
            throw validation_error(path + ": unexpected character in row " +
                                   std::to_string(rows));
        }
        if (cols == 0)
            cols = here;
        else if (here != cols)
            throw validation_error(path + ": ragged row " + std::to_string(rows));
        ++rows;
    }
    if (rows == 0) throw validation_error(path + ": empty matrix");
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    if (!m.all_finite()) throw validation_error(path + ": non-finite value");
    return m;
}

inline void write_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw validation_error("cannot open " + path + " for writing");
    char buf[40];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            if (j) os << ',';
            os << buf;
        }
        os << '\n';
    }
    if (!os) throw validation_error("write failed for " + path);
}

inline std::vector<std::string> load_lines(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

inline Dataset load_dataset(const std::string& dir) {
    const DatasetFiles files = DatasetFiles::in_dir(dir);

    nlohmann::json split;
    {
        std::ifstream is(files.split_path);
        if (!is) throw validation_error("cannot open " + files.split_path);
        try {
            split = nlohmann::json::parse(is);
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(files.split_path + ": " + e.what());
        }
    }
    std::vector<std::string> seen, unseen;
    try {
        seen = split.at("seen").get<std::vector<std::string>>();
        unseen = split.value("unseen", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(files.split_path + ": " + e.what());
    }

    std::vector<std::string> names = seen;
    names.insert(names.end(), unseen.begin(), unseen.end());
    Matrix sem = load_csv_matrix(files.semantics_path);
    if (sem.rows() != names.size())
        throw validation_error(files.semantics_path + ": " + std::to_string(sem.rows()) +
                               " rows but split names " + std::to_string(names.size()) +
                               " classes");
    Dataset ds;
    ds.table = make_semantic_table(std::move(names), std::move(sem), seen.size());

    ds.features = load_csv_matrix(files.features_path);
    const std::vector<std::string> label_names = load_lines(files.labels_path);
    if (label_names.size() != ds.features.rows())
        throw validation_error(files.labels_path + ": " +
                               std::to_string(label_names.size()) + " labels for " +
                               std::to_string(ds.features.rows()) + " feature rows");
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.table.names.size(); ++i)
        index.emplace(ds.table.names[i], i);
    for (const std::string& name : label_names) {
        const auto it = index.find(name);
        if (it == index.end())
            throw validation_error(files.labels_path + ": label '" + name +
                                   "' missing from semantics split");
        ds.labels.push_back(it->second);
    }
    return ds;
}

inline void save_dataset(const std::string& dir, const SemanticTable& table,
                         const Matrix& features, const std::vector<std::size_t>& labels) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw validation_error("cannot create directory " + dir);
    const DatasetFiles files = DatasetFiles::in_dir(dir);
    if (features.rows() != labels.size())
        throw validation_error("save_dataset: feature/label count mismatch");

    write_csv_matrix(files.features_path, features);
    write_csv_matrix(files.semantics_path, table.vectors);
    {
        std::ofstream os(files.labels_path, std::ios::trunc);
        if (!os) throw validation_error("cannot open " + files.labels_path);
        for (std::size_t l : labels) {
            if (l >= table.total())
                throw validation_error("save_dataset: label out of range");
            os << table.names[l] << '\n';
        }
    }
    {
        nlohmann::json split;
        split["seen"] = std::vector<std::string>(table.names.begin(),
                                                 table.names.begin() + table.seen_count);
        split["unseen"] =
            std::vector<std::string>(table.names.begin() + table.seen_count,
                                     table.names.end());
        std::ofstream os(files.split_path, std::ios::trunc);
        if (!os) throw validation_error("cannot open " + files.split_path);
        os << split.dump(2) << "\n";
    }
}

}  // namespace hzsl
