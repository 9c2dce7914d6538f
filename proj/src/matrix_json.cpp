#include "cfslab/matrix_json.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace cfslab {

namespace {

double number_at(const nlohmann::json& j, const char* what) {
    if (!j.is_number()) throw ConfigError(std::string("matrix literal: non-numeric ") + what);
    return j.get<double>();
}

// Maps a byte offset into 1-based (line, column).
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) {
        throw ConfigError("matrix literal needs \"dim\" and \"entries\"");
    }
    if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1) {
        throw ConfigError("matrix literal: \"dim\" must be a positive integer");
    }
    const auto dim = static_cast<Eigen::Index>(j["dim"].get<long long>());
    const auto& rows = j["entries"];
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != dim) {
        throw ConfigError("matrix literal: expected " + std::to_string(dim) + " rows");
    }
    Matrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim) {
            throw ConfigError("matrix literal: ragged row " + std::to_string(r));
        }
        for (Eigen::Index c = 0; c < dim; ++c) {
            const auto& z = row[static_cast<std::size_t>(c)];
            if (!z.is_array() || z.size() != 2) {
                throw ConfigError("matrix literal: entry must be [re, im]");
            }
            m(r, c) = cplx(number_at(z[0], "real part"), number_at(z[1], "imaginary part"));
        }
    }
    return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back({m(r, c).real(), m(r, c).imag()});
        }
        rows.push_back(std::move(row));
    }
    return {{"dim", m.rows()}, {"entries", std::move(rows)}};
}

nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": malformed JSON");
    }
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path);
}

}  // namespace cfslab
