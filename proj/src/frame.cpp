#include "stratify/frame.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "stratify/error.hpp"

namespace stratify {

namespace {

bool parse_double(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* begin = text.c_str();
    char* end = nullptr;
    value = std::strtod(begin, &end);
    while (end && (*end == ' ' || *end == '\t')) ++end;
    return end && *end == '\0' && end != begin;
}

bool is_missing(const std::string& field) {
    return field.empty() || field == "NA" || field == "NaN" || field == "nan";
}

std::string trim(const std::string& s) {
    auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Splits one delimited record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(trim(field));
    return fields;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Sorted distinct values of a column and a map back to their codes.
std::vector<int> intern(const std::vector<std::string>& column, std::vector<std::string>& names) {
    names.assign(column.begin(), column.end());
    std::sort(names.begin(), names.end(), natural_less);
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::unordered_map<std::string, int> code;
    for (std::size_t i = 0; i < names.size(); ++i) code.emplace(names[i], static_cast<int>(i));
    std::vector<int> out;
    out.reserve(column.size());
    for (const auto& v : column) out.push_back(code.at(v));
    return out;
}

}  // namespace

bool natural_less(const std::string& a, const std::string& b) {
    double x = 0, y = 0;
    const bool na = parse_double(a, x), nb = parse_double(b, y);
    if (na != nb) return na;  // numbers first
    if (na && x != y) return x < y;
    return a < b;
}

void FrameSchema::validate() const {
    if (target_columns.empty()) throw Error(ErrorKind::InvalidSchema, "at least one target column is required");
    if (aux_columns.empty()) throw Error(ErrorKind::InvalidSchema, "at least one auxiliary column is required");
    std::set<std::string> seen;
    auto add = [&](const std::string& name) {
        if (!seen.insert(name).second)
            throw Error(ErrorKind::InvalidSchema, "column listed twice: " + name);
    };
    for (const auto& c : target_columns) add(c);
    for (const auto& c : aux_columns) add(c);
    if (!domain_column.empty()) add(domain_column);
    if (id_column) add(*id_column);
}

Frame Frame::from_columns(FrameSchema schema, std::vector<std::string> ids, std::vector<std::string> domains,
                          const std::vector<std::vector<double>>& targets,
                          const std::vector<std::vector<std::string>>& aux) {
    schema.validate();
    const std::size_t n = ids.size();
    const std::size_t G = schema.target_columns.size();
    const std::size_t M = schema.aux_columns.size();
    if (n == 0) throw Error(ErrorKind::EmptyFrame, "frame has no rows");
    if (targets.size() != G || aux.size() != M || domains.size() != n)
        throw Error(ErrorKind::LengthMismatch, "column count does not match schema");

    Frame f;
    f.schema_ = std::move(schema);
    f.ids_ = std::move(ids);
    f.y_.resize(n * G);
    for (std::size_t g = 0; g < G; ++g) {
        if (targets[g].size() != n) throw Error(ErrorKind::LengthMismatch, "target column length mismatch");
        for (std::size_t r = 0; r < n; ++r) f.y_[r * G + g] = targets[g][r];
    }
    f.x_.resize(n * M);
    f.categories_.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
        if (aux[m].size() != n) throw Error(ErrorKind::LengthMismatch, "auxiliary column length mismatch");
        auto codes = intern(aux[m], f.categories_[m]);
        for (std::size_t r = 0; r < n; ++r) f.x_[r * M + m] = codes[r];
    }
    f.domain_ = intern(domains, f.domain_names_);
    return f;
}

Frame load_frame(std::istream& source, const FrameSchema& schema, const LoadOptions& options) {
    schema.validate();
    std::string line;
    if (!std::getline(source, line)) throw Error(ErrorKind::EmptyFrame, "missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_record(line, options.delimiter);

    auto column_index = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorKind::MissingColumn, "missing column: " + name);
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> target_idx, aux_idx;
    for (const auto& c : schema.target_columns) target_idx.push_back(column_index(c));
    for (const auto& c : schema.aux_columns) aux_idx.push_back(column_index(c));
    std::optional<std::size_t> domain_idx, id_idx;
    if (!schema.domain_column.empty()) domain_idx = column_index(schema.domain_column);
    if (schema.id_column) id_idx = column_index(*schema.id_column);
    for (const auto& [name, k] : options.discretize) {
        if (std::find(schema.aux_columns.begin(), schema.aux_columns.end(), name) == schema.aux_columns.end())
            throw Error(ErrorKind::InvalidSchema, "discretized column is not an auxiliary: " + name);
        if (k < 1) throw Error(ErrorKind::InvalidArgs, "discretize k must be positive for " + name);
    }

    const std::size_t G = target_idx.size(), M = aux_idx.size();
    std::vector<std::string> ids, domains;
    std::vector<std::vector<double>> targets(G);
    std::vector<std::vector<std::string>> aux(M);

    std::size_t row = 0;
    while (std::getline(source, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_record(line, options.delimiter);
        auto field = [&](std::size_t idx) -> std::string { return idx < fields.size() ? fields[idx] : std::string{}; };

        std::optional<std::string> missing;
        for (std::size_t g = 0; g < G && !missing; ++g)
            if (is_missing(field(target_idx[g]))) missing = schema.target_columns[g];
        for (std::size_t m = 0; m < M && !missing; ++m)
            if (is_missing(field(aux_idx[m]))) missing = schema.aux_columns[m];
        if (!missing && domain_idx && is_missing(field(*domain_idx))) missing = schema.domain_column;
        if (missing) {
            if (options.missing == MissingPolicy::DropRow) continue;
            throw Error(ErrorKind::MissingValue,
                        "missing value at row " + std::to_string(row) + ", column " + *missing);
        }

        for (std::size_t g = 0; g < G; ++g) {
            double v = 0;
            if (!parse_double(field(target_idx[g]), v) || !std::isfinite(v))
                throw Error(ErrorKind::ParseError, "cannot parse number at row " + std::to_string(row) +
                                                       ", column " + schema.target_columns[g]);
            targets[g].push_back(v);
        }
        for (std::size_t m = 0; m < M; ++m) aux[m].push_back(field(aux_idx[m]));
        domains.push_back(domain_idx ? field(*domain_idx) : std::string("1"));
        ids.push_back(id_idx ? field(*id_idx) : std::to_string(row));
    }
    if (ids.empty()) throw Error(ErrorKind::EmptyFrame, "frame has no data rows");

    for (const auto& [name, k] : options.discretize) {
        const auto m = static_cast<std::size_t>(
            std::find(schema.aux_columns.begin(), schema.aux_columns.end(), name) - schema.aux_columns.begin());
        std::vector<double> values(aux[m].size());
        for (std::size_t r = 0; r < values.size(); ++r)
            if (!parse_double(aux[m][r], values[r]))
                throw Error(ErrorKind::ParseError,
                            "cannot parse number at row " + std::to_string(r + 1) + ", column " + name);
        const auto labels = discretize(values, k);
        aux[m] = class_names(values, labels);
    }
    return Frame::from_columns(schema, std::move(ids), std::move(domains), targets, aux);
}

Frame load_frame_file(const std::string& path, const FrameSchema& schema, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open frame: " + path);
    return load_frame(in, schema, options);
}

std::vector<int> discretize(std::span<const double> values, int k) {
    if (values.empty()) throw Error(ErrorKind::InvalidArgs, "discretize needs at least one value");
    if (k < 1) throw Error(ErrorKind::InvalidArgs, "discretize k must be positive");

    std::vector<double> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const std::size_t d = distinct.size();
    if (static_cast<std::size_t>(k) > d)
        throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(d) +
                                              " distinct values");

    std::vector<double> weight(d, 0.0);
    for (double v : values)
        weight[std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin()] += 1.0;

    // Prefix sums over distinct values, shifted by the median for conditioning.
    const double shift = distinct[d / 2];
    std::vector<double> w(d + 1, 0.0), s1(d + 1, 0.0), s2(d + 1, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double x = distinct[i] - shift;
        w[i + 1] = w[i] + weight[i];
        s1[i + 1] = s1[i] + weight[i] * x;
        s2[i + 1] = s2[i] + weight[i] * x * x;
    }
    // SSE of distinct values [i, j).
    auto sse = [&](std::size_t i, std::size_t j) {
        const double ww = w[j] - w[i], a = s1[j] - s1[i];
        return std::max(0.0, (s2[j] - s2[i]) - a * a / ww);
    };

    const auto K = static_cast<std::size_t>(k);
    constexpr double inf = std::numeric_limits<double>::infinity();
    // cost[c][j]: best SSE of the first j values in c clusters.
    std::vector<std::vector<double>> cost(K + 1, std::vector<double>(d + 1, inf));
    std::vector<std::vector<std::size_t>> split(K + 1, std::vector<std::size_t>(d + 1, 0));
    cost[0][0] = 0.0;
    for (std::size_t c = 1; c <= K; ++c) {
        for (std::size_t j = c; j <= d - (K - c); ++j) {
            for (std::size_t i = c - 1; i < j; ++i) {
                if (cost[c - 1][i] == inf) continue;
                const double total = cost[c - 1][i] + sse(i, j);
                if (total < cost[c][j]) {
                    cost[c][j] = total;
                    split[c][j] = i;
                }
            }
        }
    }

    std::vector<int> cluster_of(d);
    std::size_t j = d;
    for (std::size_t c = K; c >= 1; --c) {
        const std::size_t i = split[c][j];
        for (std::size_t t = i; t < j; ++t) cluster_of[t] = static_cast<int>(c);
        j = i;
    }
    std::vector<int> labels;
    labels.reserve(values.size());
    for (double v : values)
        labels.push_back(cluster_of[std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin()]);
    return labels;
}

std::vector<std::string> class_names(std::span<const double> values, std::span<const int> labels) {
    if (values.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, "values and labels differ in length");
    std::map<int, std::pair<double, double>> range;
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto [it, fresh] = range.try_emplace(labels[i], values[i], values[i]);
        if (!fresh) {
            it->second.first = std::min(it->second.first, values[i]);
            it->second.second = std::max(it->second.second, values[i]);
        }
    }
    std::vector<std::string> out;
    out.reserve(values.size());
    for (int l : labels) {
        const auto& [lo, hi] = range.at(l);
        out.push_back("[" + format_number(lo) + ";" + format_number(hi) + "](" + std::to_string(l) + ")");
    }
    return out;
}

std::vector<DomainFrame> split_domains(const Frame& frame) {
    std::vector<DomainFrame> out(frame.domains().size());
    for (std::size_t d = 0; d < out.size(); ++d) out[d].domain = frame.domains()[d];
    for (std::size_t r = 0; r < frame.rows(); ++r) out[static_cast<std::size_t>(frame.domain_code(r))].rows.push_back(r);
    return out;
}

}  // namespace stratify
