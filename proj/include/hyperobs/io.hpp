#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hyperobs/matrix.hpp"
#include "hyperobs/nonlinearity.hpp"
#include "hyperobs/system.hpp"

/// JSON file formats for systems and certificates. Documents are strict:
/// unknown fields are rejected, dimension mismatches name the offending
/// field, and loading runs the full invariant validation. Serialization uses
/// shortest-round-trip formatting, so save/load is lossless to full
/// precision.
namespace hyperobs {

using json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown_fields(const json& j, std::initializer_list<const char*> allowed,
                                  const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (item.key() == name) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw std::invalid_argument(where + ": unknown field \"" + item.key() + "\"");
        }
    }
}

inline const json& get_field(const json& j, const char* name, const std::string& where) {
    const auto it = j.find(name);
    if (it == j.end()) throw std::invalid_argument(where + ": missing field \"" + name + "\"");
    return *it;
}

inline double get_real(const json& j, const char* name, const std::string& where) {
    const json& f = get_field(j, name, where);
    if (!f.is_number()) throw std::invalid_argument(where + ": field \"" + name + "\" must be a number");
    return f.get<double>();
}

inline std::size_t get_dim(const json& j, const char* name, const std::string& where) {
    const json& f = get_field(j, name, where);
    if (!f.is_number_integer() || f.get<long long>() < 1) {
        throw std::invalid_argument(where + ": field \"" + name + "\" must be a positive integer");
    }
    return static_cast<std::size_t>(f.get<long long>());
}

inline Vec get_vector(const json& j, const char* name, std::size_t len, const std::string& where) {
    const json& f = get_field(j, name, where);
    if (!f.is_array()) throw std::invalid_argument(where + ": field \"" + name + "\" must be an array");
    if (f.size() != len) {
        throw std::invalid_argument(where + ": field \"" + name + "\" must have length " +
                                    std::to_string(len) + ", got " + std::to_string(f.size()));
    }
    Vec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f[i].is_number()) {
            throw std::invalid_argument(where + ": field \"" + name + "\" must contain numbers only");
        }
        out[i] = f[i].get<double>();
    }
    return out;
}

inline Mat get_matrix(const json& j, const char* name, std::size_t rows, std::size_t cols,
                      const std::string& where) {
    const json& f = get_field(j, name, where);
    if (!f.is_array()) {
        throw std::invalid_argument(where + ": field \"" + name + "\" must be an array of rows");
    }
    if (f.size() != rows) {
        throw std::invalid_argument(where + ": field \"" + name + "\" must have " +
                                    std::to_string(rows) + " rows, got " + std::to_string(f.size()));
    }
    Mat out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!f[i].is_array() || f[i].size() != cols) {
            throw std::invalid_argument(where + ": field \"" + name + "\" row " + std::to_string(i) +
                                        " must have " + std::to_string(cols) + " entries");
        }
        for (std::size_t k = 0; k < cols; ++k) {
            if (!f[i][k].is_number()) {
                throw std::invalid_argument(where + ": field \"" + name + "\" must contain numbers only");
            }
            out(i, k) = f[i][k].get<double>();
        }
    }
    return out;
}

inline json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json parse_document(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(where + ": " + e.what());
    }
}

}  // namespace detail

inline PdeOdeSystem load_system(const std::string& text) {
    const std::string where = "system document";
    const json j = detail::parse_document(text, where);
    if (!j.is_object()) throw std::invalid_argument(where + ": top level must be an object");
    detail::reject_unknown_fields(
        j, {"n_x", "n_chi", "n_z", "n_y", "lambda", "A", "B", "C", "Z", "M", "psi", "ell"}, where);

    const std::size_t nx = detail::get_dim(j, "n_x", where);
    const std::size_t nchi = detail::get_dim(j, "n_chi", where);
    const std::size_t nz = detail::get_dim(j, "n_z", where);
    const std::size_t ny = detail::get_dim(j, "n_y", where);

    PdeOdeSystem sys;
    sys.lambda = detail::get_vector(j, "lambda", nx, where);
    sys.a_mat = detail::get_matrix(j, "A", nchi, nchi, where);
    sys.b_mat = detail::get_matrix(j, "B", nchi, nz, where);  // n_l = n_z
    sys.c_mat = detail::get_matrix(j, "C", nx, nchi, where);
    sys.z_mat = detail::get_matrix(j, "Z", nz, nchi, where);
    sys.m_mat = detail::get_matrix(j, "M", ny, nx, where);

    const json& psi = detail::get_field(j, "psi", where);
    if (!psi.is_object()) throw std::invalid_argument(where + ": field \"psi\" must be an object");
    detail::reject_unknown_fields(psi, {"kind", "width"}, where + " (psi)");
    const json& kind = detail::get_field(psi, "kind", where + " (psi)");
    if (!kind.is_string()) throw std::invalid_argument(where + ": psi.kind must be a string");
    sys.psi.kind = nonlin_kind_from_string(kind.get<std::string>());
    sys.psi.width = psi.contains("width") ? detail::get_real(psi, "width", where + " (psi)") : 1.0;

    sys.ell = detail::get_real(j, "ell", where);
    validate(sys);
    return sys;
}

inline std::string save_system(const PdeOdeSystem& sys) {
    validate(sys);
    json j;
    j["n_x"] = sys.n_x();
    j["n_chi"] = sys.n_chi();
    j["n_z"] = sys.n_z();
    j["n_y"] = sys.n_y();
    j["lambda"] = sys.lambda;
    j["A"] = detail::matrix_to_json(sys.a_mat);
    j["B"] = detail::matrix_to_json(sys.b_mat);
    j["C"] = detail::matrix_to_json(sys.c_mat);
    j["Z"] = detail::matrix_to_json(sys.z_mat);
    j["M"] = detail::matrix_to_json(sys.m_mat);
    j["psi"] = json{{"kind", to_string(sys.psi.kind)}, {"width", sys.psi.width}};
    j["ell"] = sys.ell;
    return j.dump(2) + "\n";
}

inline Certificate load_certificate(const std::string& text) {
    const std::string where = "certificate document";
    const json j = detail::parse_document(text, where);
    if (!j.is_object()) throw std::invalid_argument(where + ": top level must be an object");
    detail::reject_unknown_fields(j, {"P1", "P2", "P3", "L", "mu", "iota"}, where);

    const json& p1 = detail::get_field(j, "P1", where);
    if (!p1.is_array() || p1.empty()) {
        throw std::invalid_argument(where + ": field \"P1\" must be a nonempty array of diagonal entries");
    }
    const std::size_t nx = p1.size();

    const json& p3 = detail::get_field(j, "P3", where);
    if (!p3.is_array() || p3.empty()) {
        throw std::invalid_argument(where + ": field \"P3\" must be a nonempty array of rows");
    }
    const std::size_t nchi = p3.size();

    const json& l = detail::get_field(j, "L", where);
    if (!l.is_array() || l.empty() || !l[0].is_array() || l[0].empty()) {
        throw std::invalid_argument(where + ": field \"L\" must be a nonempty array of rows");
    }
    const std::size_t ny = l[0].size();

    Certificate cert;
    cert.p1 = detail::get_vector(j, "P1", nx, where);
    cert.p2 = detail::get_matrix(j, "P2", nchi, nx, where);
    cert.p3 = detail::get_matrix(j, "P3", nchi, nchi, where);
    cert.l_gain = detail::get_matrix(j, "L", nchi, ny, where);
    cert.mu = detail::get_real(j, "mu", where);
    cert.iota = detail::get_real(j, "iota", where);
    validate(cert);
    return cert;
}

namespace detail {

inline json certificate_to_json(const Certificate& cert) {
    json j;
    j["P1"] = cert.p1;
    j["P2"] = detail::matrix_to_json(cert.p2);
    j["P3"] = detail::matrix_to_json(cert.p3);
    j["L"] = detail::matrix_to_json(cert.l_gain);
    j["mu"] = cert.mu;
    j["iota"] = cert.iota;
    return j;
}

}  // namespace detail

inline std::string save_certificate(const Certificate& cert) {
    validate(cert);
    return detail::certificate_to_json(cert).dump(2) + "\n";
}

}  // namespace hyperobs
