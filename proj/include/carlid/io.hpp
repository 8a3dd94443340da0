#pragma once

// CSV and manifest files. Numbers are written in shortest round-trip form so
// identical runs produce identical bytes.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "nummat.hpp"
#include "simulate.hpp"

namespace carlid {

namespace fs = std::filesystem;

inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
        write_cells(header);
    }

    template <typename... Cells>
    void row(const Cells&... cells) {
        std::vector<std::string> v{to_cell(cells)...};
        write_cells(v);
    }

    void row(const std::vector<double>& cells) {
        std::vector<std::string> v;
        v.reserve(cells.size());
        for (double c : cells) v.push_back(format_real(c));
        write_cells(v);
    }

private:
    static std::string to_cell(double v) { return format_real(v); }
    static std::string to_cell(const std::string& s) { return s; }
    static std::string to_cell(const char* s) { return s; }
    static std::string to_cell(bool b) { return b ? "true" : "false"; }
    template <typename I>
        requires std::is_integral_v<I>
    static std::string to_cell(I i) {
        return std::to_string(i);
    }

    void write_cells(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::out_of_range("CSV has no column '" + name + "'");
    }
    double number(std::size_t row, const std::string& name) const {
        return std::strtod(rows.at(row).at(column(name)).c_str(), nullptr);
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path.string() + "' is empty");
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_csv_line(line));
        if (t.rows.back().size() != t.header.size())
            throw std::runtime_error("'" + path.string() + "': row " + std::to_string(t.rows.size()) +
                                     " has the wrong number of cells");
    }
    return t;
}

/// key = value manifest plus one "file:" entry per emitted CSV.
class Manifest {
public:
    void set(const std::string& key, const std::string& value) {
        for (auto& kv : entries_)
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        entries_.emplace_back(key, value);
    }
    void set(const std::string& key, double value) { set(key, format_real(value)); }

    void add_file(const std::string& name, const std::string& config_hash) {
        files_.push_back(name + " config_hash=" + config_hash);
    }

    void write(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
        for (const auto& f : files_) out << "file: " << f << '\n';
    }

    static std::map<std::string, std::string> read(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read manifest '" + path.string() + "'");
        std::map<std::string, std::string> kv;
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("file:", 0) == 0) continue;
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) continue;
            kv[line.substr(0, eq)] = line.substr(eq + 3);
        }
        return kv;
    }

    const std::vector<std::string>& files() const noexcept { return files_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<std::string> files_;
};

inline void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < m.cols(); ++j) header.push_back("c" + std::to_string(j));
    CsvWriter w(path, header);
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        w.row(row);
    }
}

inline Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
    const CsvTable t = read_csv(path);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.header.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::strtod(t.rows[i][j].c_str(), nullptr);
    return m;
}

inline std::string trajectory_file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "traj_%04zu.csv", i);
    return buf;
}

struct DatasetInfo {
    std::uint64_t seed = 0;
    std::string field_description;
    std::size_t rejected = 0;
    std::string config_hash;
};

/// One CSV per trajectory (t, x1..xd) plus manifest.txt.
inline void write_trajectory_set(const fs::path& dir, const TrajectorySet& set, const DatasetInfo& info) {
    fs::create_directories(dir);
    Manifest man;
    man.set("kind", std::string("trajectory_set"));
    man.set("count", std::to_string(set.size()));
    man.set("dim", std::to_string(set.empty() ? 0 : set.dim()));
    man.set("seed", std::to_string(info.seed));
    man.set("t0", set.empty() ? 0.0 : set.grid().t0);
    man.set("h", set.empty() ? 0.0 : set.grid().h);
    man.set("points", std::to_string(set.empty() ? 0 : set.grid().count));
    man.set("M", set.amplitude_bound());
    man.set("norm", std::string(to_string(set.norm())));
    man.set("rejected", std::to_string(info.rejected));
    man.set("field", info.field_description);
    man.set("config_hash", info.config_hash);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& tr = set[i];
        std::vector<std::string> header{"t"};
        for (std::size_t j = 0; j < tr.dim(); ++j) header.push_back("x" + std::to_string(j + 1));
        CsvWriter w(dir / trajectory_file_name(i), header);
        std::vector<double> row(tr.dim() + 1);
        for (std::size_t k = 0; k < tr.grid.count; ++k) {
            row[0] = tr.grid.time(k);
            for (std::size_t j = 0; j < tr.dim(); ++j)
                row[j + 1] = tr.states(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
            w.row(row);
        }
        man.add_file(trajectory_file_name(i), info.config_hash);
    }
    man.write(dir / "manifest.txt");
}

inline TrajectorySet read_trajectory_set(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.txt"))
        throw std::runtime_error("no dataset at '" + dir.string() + "' (manifest.txt missing; run 'generate' first)");
    const auto kv = Manifest::read(dir / "manifest.txt");
    auto get = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error("dataset manifest lacks '" + k + "'");
        return it->second;
    };
    const std::size_t count = std::stoul(get("count"));
    const std::size_t dim = std::stoul(get("dim"));
    const double t0 = std::stod(get("t0"));
    const double h = std::stod(get("h"));
    const std::size_t points = std::stoul(get("points"));
    const double m = std::stod(get("M"));
    const NormKind norm = parse_norm(get("norm"));
    const TimeGrid grid(t0, h, points);

    std::vector<Trajectory> trajs;
    trajs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const CsvTable t = read_csv(dir / trajectory_file_name(i));
        if (t.header.size() != dim + 1 || t.rows.size() != points)
            throw std::runtime_error("trajectory file " + trajectory_file_name(i) + " does not match the manifest");
        Trajectory tr{grid, Eigen::MatrixXd(static_cast<Eigen::Index>(points), static_cast<Eigen::Index>(dim))};
        for (std::size_t k = 0; k < points; ++k)
            for (std::size_t j = 0; j < dim; ++j)
                tr.states(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                    std::strtod(t.rows[k][j + 1].c_str(), nullptr);
        trajs.push_back(std::move(tr));
    }
    return TrajectorySet(std::move(trajs), m, norm);
}

}  // namespace carlid
