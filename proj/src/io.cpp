#include "smrm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace smrm {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur.push_back('"');
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string comment_block(const std::string& comment) {
    if (comment.empty()) return {};
    std::string out;
    std::istringstream lines(comment);
    for (std::string line; std::getline(lines, line);) out += "# " + line + "\n";
    return out;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
        throw Error(ErrorCode::parse_error, "not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(sep, start), text.size());
        const std::string_view item = trim(text.substr(start, end - start));
        if (!item.empty()) out.emplace_back(item);
        start = end + 1;
    }
    return out;
}

Dataset parse_csv(std::istream& in, const IngestConfig& config, const std::string& source) {
    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw Error(ErrorCode::parse_error, source + ": missing header row");

    std::map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (!position.emplace(header[c], c).second) {
            throw Error(ErrorCode::parse_error, source + ": duplicate column '" + header[c] + "'");
        }
    }
    auto resolve = [&](const std::vector<std::string>& names) {
        std::vector<std::size_t> idx;
        for (const auto& name : names) {
            auto it = position.find(name);
            if (it == position.end()) throw Error(ErrorCode::invalid_argument, source + ": no column named '" + name + "'");
            idx.push_back(it->second);
        }
        return idx;
    };
    auto complement = [&](const std::vector<std::size_t>& taken) {
        std::vector<std::size_t> rest;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (std::find(taken.begin(), taken.end(), c) == taken.end()) rest.push_back(c);
        }
        return rest;
    };

    if (config.response_columns.empty() && config.predictor_columns.empty()) {
        throw Error(ErrorCode::invalid_argument, "declare response_columns and/or predictor_columns");
    }
    std::vector<std::size_t> resp = resolve(config.response_columns);
    std::vector<std::size_t> pred = resolve(config.predictor_columns);
    if (resp.empty()) resp = complement(pred);
    if (pred.empty()) pred = complement(resp);
    for (std::size_t c : resp) {
        if (std::find(pred.begin(), pred.end(), c) != pred.end()) {
            throw Error(ErrorCode::invalid_argument, "column '" + header[c] + "' is both predictor and response");
        }
    }
    if (resp.empty() || pred.empty()) {
        throw Error(ErrorCode::invalid_argument, "need at least one predictor and one response column");
    }

    std::vector<std::vector<double>> xs, ys;
    std::vector<std::vector<bool>> masks;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::parse_error, source + ":" + std::to_string(line_no) + ": expected " +
                                                    std::to_string(header.size()) + " fields, found " +
                                                    std::to_string(fields.size()));
        }
        auto cell = [&](std::size_t c) -> double {
            try {
                return parse_double(fields[c]);
            } catch (const Error&) {
                throw Error(ErrorCode::parse_error, source + ":" + std::to_string(line_no) + ", column '" +
                                                        header[c] + "': cannot parse '" + fields[c] + "'");
            }
        };
        std::vector<double> xrow, yrow;
        std::vector<bool> mrow;
        for (std::size_t c : pred) {
            if (fields[c] == config.missing_token) {
                throw Error(ErrorCode::missing_predictor, source + ":" + std::to_string(line_no) +
                                                              ", predictor column '" + header[c] +
                                                              "' is missing; predictors must be complete");
            }
            xrow.push_back(cell(c));
        }
        for (std::size_t c : resp) {
            if (fields[c] == config.missing_token) {
                yrow.push_back(0.0);
                mrow.push_back(false);
            } else {
                yrow.push_back(cell(c));
                mrow.push_back(true);
            }
        }
        xs.push_back(std::move(xrow));
        ys.push_back(std::move(yrow));
        masks.push_back(std::move(mrow));
    }

    const auto n = static_cast<Index>(xs.size());
    const auto p = static_cast<Index>(pred.size());
    const auto q = static_cast<Index>(resp.size());
    Dataset data;
    data.X.resize(n, p);
    Matrix Yv(n, q);
    BoolMatrix mask(n, q);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) data.X(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (Index l = 0; l < q; ++l) {
            Yv(i, l) = ys[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
            mask(i, l) = masks[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
        }
    }
    std::vector<std::string> resp_names, pred_names;
    for (std::size_t c : resp) resp_names.push_back(header[c]);
    for (std::size_t c : pred) pred_names.push_back(header[c]);
    data.Y = MaskedMatrix(std::move(Yv), std::move(mask), std::move(resp_names));
    data.predictor_names = std::move(pred_names);
    data.Y.require_observed_columns();
    data.validate();
    return data;
}

Dataset ingest_csv(const std::filesystem::path& path, const IngestConfig& config) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "'");
    return parse_csv(in, config, path.string());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write '" + tmp.string() + "'");
        out << contents;
        if (!out.flush()) throw Error(ErrorCode::io_error, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot rename into '" + path.string() + "': " + ec.message());
}

void write_csv_table(const std::filesystem::path& path, const CsvTable& table, const std::string& comment) {
    std::string out = comment_block(comment);
    auto join = [](const std::vector<std::string>& fields) {
        std::string line;
        for (std::size_t k = 0; k < fields.size(); ++k) {
            if (k) line.push_back(',');
            line += quote_if_needed(fields[k]);
        }
        return line + "\n";
    };
    out += join(table.header);
    for (const auto& row : table.rows) out += join(row);
    write_file_atomic(path, out);
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, const std::string& missing_token,
                       const std::string& comment) {
    CsvTable table;
    std::vector<std::string> pred_names = data.predictor_names;
    if (pred_names.empty()) {
        for (Index j = 0; j < data.p(); ++j) pred_names.push_back("x" + std::to_string(j + 1));
    }
    table.header = pred_names;
    for (const auto& name : data.Y.column_names()) table.header.push_back(name);
    for (Index i = 0; i < data.n(); ++i) {
        std::vector<std::string> row;
        for (Index j = 0; j < data.p(); ++j) row.push_back(format_double(data.X(i, j)));
        for (Index l = 0; l < data.q(); ++l) {
            row.push_back(data.Y.observed(i, l) ? format_double(data.Y(i, l)) : missing_token);
        }
        table.rows.push_back(std::move(row));
    }
    write_csv_table(path, table, comment);
}

CsvTable matrix_table(const Matrix& M, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& corner) {
    CsvTable table;
    table.header.push_back(corner);
    for (const auto& c : col_labels) table.header.push_back(c);
    for (Index i = 0; i < M.rows(); ++i) {
        std::vector<std::string> row{row_labels.at(static_cast<std::size_t>(i))};
        for (Index j = 0; j < M.cols(); ++j) row.push_back(format_double(M(i, j)));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string heatmap_svg(const Matrix& R, const std::vector<std::string>& labels, const std::string& title) {
    const Index q = R.rows();
    const int cell = 24;
    const int margin = 60;
    const int size = margin + static_cast<int>(q) * cell + 10;
    auto colour = [](double v) {
        v = std::clamp(v, -1.0, 1.0);
        int r, g, b;
        if (v >= 0) {
            r = 255;
            g = b = static_cast<int>(std::lround(255 * (1.0 - v)));
        } else {
            b = 255;
            r = g = static_cast<int>(std::lround(255 * (1.0 + v)));
        }
        char buf[16];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size + 20
        << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    svg << "<text x=\"" << margin << "\" y=\"14\" font-size=\"12\">" << title << "</text>\n";
    for (Index i = 0; i < q; ++i) {
        const int y = margin + static_cast<int>(i) * cell;
        svg << "<text x=\"" << margin - 4 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
            << labels.at(static_cast<std::size_t>(i)) << "</text>\n";
        svg << "<text x=\"" << margin + static_cast<int>(i) * cell + cell / 2 << "\" y=\"" << margin - 4
            << "\" text-anchor=\"middle\">" << labels.at(static_cast<std::size_t>(i)) << "</text>\n";
        for (Index j = 0; j < q; ++j) {
            svg << "<rect x=\"" << margin + static_cast<int>(j) * cell << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << colour(R(i, j)) << "\"><title>"
                << format_double(R(i, j)) << "</title></rect>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace smrm
