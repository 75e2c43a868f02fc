#pragma once

// File formats: spreading functions, coefficient vectors, supports and
// recovery reports as JSON; Zak fields as a small binary container (with a
// JSON mirror for debugging); measurement-matrix dumps and condition profiles
// as CSV.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ios>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zakident/certify.hpp"
#include "zakident/errors.hpp"
#include "zakident/gabor.hpp"
#include "zakident/model.hpp"
#include "zakident/recover.hpp"
#include "zakident/simulate.hpp"

namespace zakident {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary Zak-field container assumes a little-endian host");

// ---- supports ----

inline json support_to_json(const SupportSet& s) {
    json arr = json::array();
    for (const Cell& c : s.cells()) arr.push_back(json::array({c.k, c.m}));
    return arr;
}

inline SupportSet support_from_json(const json& j) {
    if (!j.is_array()) throw io_error("support: expected an array of [k,m] pairs");
    std::vector<Cell> cells;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw io_error("support: expected [k,m] pairs");
        cells.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    }
    return SupportSet(std::move(cells));
}

// ---- spreading function ----

inline json spreading_to_json(const SpreadingFunction& sf) {
    json cells = json::array();
    for (std::size_t n = 0; n < sf.support.size(); ++n) {
        const Cell& c = sf.support[n];
        const cmatrix& v = sf.cell_values[n];
        json re = json::array(), im = json::array();
        for (int i = 0; i < sf.params.Nt; ++i) {
            json re_row = json::array(), im_row = json::array();
            for (int j = 0; j < sf.params.Nf; ++j) {
                re_row.push_back(v(i, j).real());
                im_row.push_back(v(i, j).imag());
            }
            re.push_back(std::move(re_row));
            im.push_back(std::move(im_row));
        }
        cells.push_back({{"k", c.k}, {"m", c.m}, {"re", std::move(re)}, {"im", std::move(im)}});
    }
    return json{{"L", sf.params.L},
                {"T", sf.params.T},
                {"Nt", sf.params.Nt},
                {"Nf", sf.params.Nf},
                {"cells", std::move(cells)}};
}

inline SpreadingFunction spreading_from_json(const json& j) {
    ModelParams p;
    p.L = j.at("L").get<int>();
    p.T = j.at("T").get<double>();
    p.Nt = j.at("Nt").get<int>();
    p.Nf = j.at("Nf").get<int>();
    std::vector<std::pair<Cell, cmatrix>> entries;
    for (const auto& e : j.at("cells")) {
        const Cell cell{e.at("k").get<int>(), e.at("m").get<int>()};
        cmatrix v(p.Nt, p.Nf);
        const auto& re = e.at("re");
        const auto& im = e.at("im");
        if (static_cast<int>(re.size()) != p.Nt || static_cast<int>(im.size()) != p.Nt)
            throw io_error("spreading function: cell array row count mismatch");
        for (int i = 0; i < p.Nt; ++i) {
            if (static_cast<int>(re.at(i).size()) != p.Nf ||
                static_cast<int>(im.at(i).size()) != p.Nf)
                throw io_error("spreading function: cell array column count mismatch");
            for (int jj = 0; jj < p.Nf; ++jj)
                v(i, jj) = cdouble{re.at(i).at(jj).get<double>(), im.at(i).at(jj).get<double>()};
        }
        entries.emplace_back(cell, std::move(v));
    }
    // file order is free; the in-memory layout follows the sorted support
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Cell> cells;
    std::vector<cmatrix> values;
    for (auto& [cell, v] : entries) {
        cells.push_back(cell);
        values.push_back(std::move(v));
    }
    SupportSet support(cells);
    if (support.size() != values.size())
        throw io_error("spreading function: duplicate cells in file");
    return SpreadingFunction(p, std::move(support), std::move(values));
}

// ---- coefficient vector ----

inline json coefficients_to_json(const CoefficientVector& c) {
    json re = json::array(), im = json::array();
    for (int k = 0; k < c.L(); ++k) {
        re.push_back(c.c(k).real());
        im.push_back(c.c(k).imag());
    }
    return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

inline CoefficientVector coefficients_from_json(const json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != im.size()) throw io_error("coefficients: re/im length mismatch");
    cvector c(static_cast<Eigen::Index>(re.size()));
    for (std::size_t k = 0; k < re.size(); ++k)
        c(static_cast<Eigen::Index>(k)) = cdouble{re.at(k).get<double>(), im.at(k).get<double>()};
    return CoefficientVector(std::move(c));
}

// ---- Zak field: binary container + JSON mirror ----

inline void zak_write_binary(const ZakField& zf, std::ostream& os) {
    os.write("ZAKF", 4);
    const std::uint32_t L = static_cast<std::uint32_t>(zf.params.L);
    const std::uint32_t Nt = static_cast<std::uint32_t>(zf.params.Nt);
    const std::uint32_t Nf = static_cast<std::uint32_t>(zf.params.Nf);
    const double T = zf.params.T;
    os.write(reinterpret_cast<const char*>(&L), 4);
    os.write(reinterpret_cast<const char*>(&Nt), 4);
    os.write(reinterpret_cast<const char*>(&Nf), 4);
    os.write(reinterpret_cast<const char*>(&T), 8);
    for (Eigen::Index p = 0; p < zf.z.rows(); ++p) {
        for (Eigen::Index g = 0; g < zf.z.cols(); ++g) {
            const double re = zf.z(p, g).real();
            const double im = zf.z(p, g).imag();
            os.write(reinterpret_cast<const char*>(&re), 8);
            os.write(reinterpret_cast<const char*>(&im), 8);
        }
    }
    if (!os) throw io_error("zak field: write failed");
}

inline ZakField zak_read_binary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "ZAKF") throw io_error("zak field: bad magic");
    std::uint32_t L = 0, Nt = 0, Nf = 0;
    double T = 0.0;
    is.read(reinterpret_cast<char*>(&L), 4);
    is.read(reinterpret_cast<char*>(&Nt), 4);
    is.read(reinterpret_cast<char*>(&Nf), 4);
    is.read(reinterpret_cast<char*>(&T), 8);
    if (!is) throw io_error("zak field: truncated header");
    ModelParams p{static_cast<int>(L), T, static_cast<int>(Nt), static_cast<int>(Nf)};
    p.validate();
    cmatrix z(p.L, p.grid_size());
    for (Eigen::Index pp = 0; pp < z.rows(); ++pp) {
        for (Eigen::Index g = 0; g < z.cols(); ++g) {
            double re = 0.0, im = 0.0;
            is.read(reinterpret_cast<char*>(&re), 8);
            is.read(reinterpret_cast<char*>(&im), 8);
            z(pp, g) = cdouble{re, im};
        }
    }
    if (!is) throw io_error("zak field: truncated payload");
    return ZakField(p, std::move(z));
}

inline json zak_to_json(const ZakField& zf) {
    json re = json::array(), im = json::array();
    for (Eigen::Index p = 0; p < zf.z.rows(); ++p) {
        for (Eigen::Index g = 0; g < zf.z.cols(); ++g) {
            re.push_back(zf.z(p, g).real());
            im.push_back(zf.z(p, g).imag());
        }
    }
    return json{{"L", zf.params.L},      {"T", zf.params.T}, {"Nt", zf.params.Nt},
                {"Nf", zf.params.Nf},    {"order", "(p,i,j) row-major"},
                {"re", std::move(re)},   {"im", std::move(im)}};
}

inline ZakField zak_from_json(const json& j) {
    ModelParams p{j.at("L").get<int>(), j.at("T").get<double>(), j.at("Nt").get<int>(),
                  j.at("Nf").get<int>()};
    p.validate();
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const std::size_t total = static_cast<std::size_t>(p.L) * p.grid_size();
    if (re.size() != total || im.size() != total) throw io_error("zak field: length mismatch");
    cmatrix z(p.L, p.grid_size());
    std::size_t n = 0;
    for (Eigen::Index pp = 0; pp < z.rows(); ++pp)
        for (Eigen::Index g = 0; g < z.cols(); ++g, ++n)
            z(pp, g) = cdouble{re.at(n).get<double>(), im.at(n).get<double>()};
    return ZakField(p, std::move(z));
}

// ---- recovery report ----

inline json report_to_json(const RecoveryReport& r) {
    json j{{"method", method_name(r.method)},
           {"feasible", r.feasible},
           {"support", support_to_json(r.support_estimate)},
           {"residual", r.residual},
           {"alpha", r.alpha},
           {"beta", r.beta},
           {"elapsed_ms", r.elapsed_ms}};
    j["support_exact"] = r.support_exact ? json(*r.support_exact) : json(nullptr);
    j["reconstruction_ok"] = r.reconstruction_ok ? json(*r.reconstruction_ok) : json(nullptr);
    j["reconstruction_rel_err"] =
        r.reconstruction_rel_err ? json(*r.reconstruction_rel_err) : json(nullptr);
    return j;
}

// ---- certificate ----

inline json certificate_to_json(const Certificate& c) {
    return json{{"delta", std::to_string(c.kmax) + "/" + std::to_string(c.L)},
                {"kmax", c.kmax},
                {"L", c.L},
                {"verdict", verdict_name(c.verdict)},
                {"worst_alpha", c.worst_alpha},
                {"worst_beta", c.worst_beta},
                {"worst_support", support_to_json(c.worst_support)},
                {"checked_count", c.checked_count},
                {"sampled", c.sampled}};
}

// ---- CSV dumps ----

// Matrix entries with re/im interleaved per column: 2*L^2 values per row.
inline void matrix_to_csv(const cmatrix& A, std::ostream& os) {
    os << std::setprecision(17);
    for (Eigen::Index p = 0; p < A.rows(); ++p) {
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
            if (c > 0) os << ',';
            os << A(p, c).real() << ',' << A(p, c).imag();
        }
        os << '\n';
    }
}

inline std::string support_compact(const SupportSet& s) {
    std::ostringstream os;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i > 0) os << ' ';
        os << '(' << s[i].k << ' ' << s[i].m << ')';
    }
    return os.str();
}

inline void profile_to_csv(const std::vector<ProfileRow>& rows, std::ostream& os) {
    os << "k,worst_ratio,argmax_support\n" << std::setprecision(17);
    for (const ProfileRow& r : rows) {
        os << r.k << ',';
        if (std::isinf(r.worst_ratio))
            os << "inf";
        else
            os << r.worst_ratio;
        os << ",\"" << support_compact(r.argmax) << "\"\n";
    }
}

// ---- file helpers ----

inline json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open for reading: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw io_error(path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const json& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
    if (!os) throw io_error("write failed: " + path);
}

inline void save_text_file(const std::string& text, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path);
    os << text;
    if (!os) throw io_error("write failed: " + path);
}

} // namespace zakident
