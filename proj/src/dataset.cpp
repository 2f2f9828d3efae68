#include "fldcrf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "fldcrf/error.hpp"

namespace fldcrf {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cell.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"' && cell.empty()) {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote");
    cells.push_back(std::move(cell));
    return cells;
}

double parse_feature(const std::string& cell, std::size_t line_no) {
    if (cell.empty()) return kMissing;
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": malformed numeric cell '" + cell + "'");
    return v;
}

long long parse_time(const std::string& cell, std::size_t line_no) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("line " + std::to_string(line_no) + ": malformed time cell '" + cell + "'");
    return v;
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

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

CsvSchema CsvSchema::standard(std::size_t feature_dim, std::vector<std::string> label_columns) {
    CsvSchema s;
    for (std::size_t d = 0; d < feature_dim; ++d) s.feature_columns.push_back("f" + std::to_string(d));
    s.label_columns = std::move(label_columns);
    return s;
}

bool operator==(const LabeledSequence& a, const LabeledSequence& b) {
    if (a.id != b.id || a.time != b.time || a.labels != b.labels) return false;
    if (a.x.rows() != b.x.rows() || a.x.cols() != b.x.cols()) return false;
    const auto va = a.x.values();
    const auto vb = b.x.values();
    for (std::size_t k = 0; k < va.size(); ++k)
        if (!same_value(va[k], vb[k])) return false;
    return true;
}

Dataset read_sequences(std::istream& in, const CsvSchema& schema, std::span<const LabelTrack> closed_alphabets) {
    if (!closed_alphabets.empty() && closed_alphabets.size() != schema.label_columns.size())
        throw SchemaError("one closed alphabet per label column is required");
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError("input has no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line, line_no);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t k = 0; k < header.size(); ++k) position.emplace(header[k], k);
    const auto column = [&](const std::string& name) {
        const auto it = position.find(name);
        if (it == position.end()) throw SchemaError("missing column '" + name + "'");
        return it->second;
    };
    const std::size_t id_col = column(schema.id_column);
    const std::size_t time_col = column(schema.time_column);
    std::vector<std::size_t> feature_cols, label_cols;
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column(name));
    for (const auto& name : schema.label_columns) label_cols.push_back(column(name));

    std::vector<std::set<std::string, std::less<>>> allowed;
    for (const auto& track : closed_alphabets) allowed.emplace_back(track.alphabet.begin(), track.alphabet.end());

    Dataset data;
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<double> row(feature_cols.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line, line_no);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " cells, found " + std::to_string(cells.size()));
        const std::string& id = cells[id_col];
        if (id.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty sequence id");

        auto [it, inserted] = slot.emplace(id, data.size());
        if (inserted) {
            LabeledSequence seq;
            seq.id = id;
            seq.x = Matrix(0, feature_cols.size());
            seq.labels.resize(label_cols.size());
            data.push_back(std::move(seq));
        }
        LabeledSequence& seq = data[it->second];
        seq.time.push_back(parse_time(cells[time_col], line_no));
        for (std::size_t d = 0; d < feature_cols.size(); ++d) row[d] = parse_feature(cells[feature_cols[d]], line_no);
        seq.x.append_row(row);
        for (std::size_t c = 0; c < label_cols.size(); ++c) {
            const std::string& value = cells[label_cols[c]];
            if (!allowed.empty() && !allowed[c].contains(value))
                throw InvalidLabel("line " + std::to_string(line_no) + ": label '" + value + "' not in the alphabet of '" +
                                   schema.label_columns[c] + "'");
            seq.labels[c].push_back(value);
        }
    }
    return data;
}

Dataset load_sequences(const std::string& path, const CsvSchema& schema, std::span<const LabelTrack> closed_alphabets) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_sequences(in, schema, closed_alphabets);
}

std::vector<std::string> read_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "' has no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return split_csv_line(line, 1);
}

void write_sequences(std::ostream& out, const Dataset& data, const CsvSchema& schema) {
    out << quote_if_needed(schema.id_column) << ',' << quote_if_needed(schema.time_column);
    for (const auto& name : schema.feature_columns) out << ',' << quote_if_needed(name);
    for (const auto& name : schema.label_columns) out << ',' << quote_if_needed(name);
    out << '\n';
    char buf[32];
    for (const LabeledSequence& seq : data) {
        if (seq.x.cols() != schema.feature_columns.size() || seq.labels.size() != schema.label_columns.size())
            throw SchemaError("sequence '" + seq.id + "' does not match the output schema");
        const std::string id = quote_if_needed(seq.id);
        for (std::size_t t = 0; t < seq.x.rows(); ++t) {
            out << id << ',' << seq.time[t];
            for (std::size_t d = 0; d < seq.x.cols(); ++d) {
                out << ',';
                if (!std::isnan(seq.x(t, d))) {
                    std::snprintf(buf, sizeof buf, "%.17g", seq.x(t, d));
                    out << buf;
                }
            }
            for (const auto& track : seq.labels) out << ',' << quote_if_needed(track[t]);
            out << '\n';
        }
    }
}

void write_sequences(const std::string& path, const Dataset& data, const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_sequences(out, data, schema);
}

std::vector<LabelTrack> infer_alphabets(const Dataset& data, const CsvSchema& schema) {
    std::vector<LabelTrack> tracks;
    for (std::size_t c = 0; c < schema.label_columns.size(); ++c) {
        std::set<std::string> seen;
        for (const auto& seq : data) seen.insert(seq.labels[c].begin(), seq.labels[c].end());
        tracks.push_back({schema.label_columns[c], {seen.begin(), seen.end()}});
    }
    return tracks;
}

Dataset impute_missing(const Dataset& data) {
    Dataset out = data;
    for (LabeledSequence& seq : out) {
        for (std::size_t d = 0; d < seq.x.cols(); ++d) {
            double last = 0.0;
            for (std::size_t t = 0; t < seq.x.rows(); ++t) {
                if (std::isnan(seq.x(t, d)))
                    seq.x(t, d) = last;
                else
                    last = seq.x(t, d);
            }
        }
    }
    return out;
}

void MinMaxRecord::apply(Matrix& x) const {
    if (x.cols() != min.size()) throw DimensionMismatch("normalization record has the wrong dimension");
    for (std::size_t t = 0; t < x.rows(); ++t) {
        for (std::size_t d = 0; d < x.cols(); ++d) {
            double& v = x(t, d);
            if (std::isnan(v)) continue;
            const double range = max[d] - min[d];
            v = range > 0.0 ? (v - min[d]) / range : 0.0;
        }
    }
}

Normalized normalize_minmax(const Dataset& data, std::span<const std::string> fit_ids) {
    if (fit_ids.empty()) throw InvalidSpec("normalization needs at least one fit sequence");
    const Dataset fit = select(data, fit_ids);
    const std::size_t dim = fit.front().x.cols();
    Normalized out;
    out.record.min.assign(dim, INFINITY);
    out.record.max.assign(dim, -INFINITY);
    for (const auto& seq : fit) {
        for (std::size_t t = 0; t < seq.x.rows(); ++t) {
            for (std::size_t d = 0; d < dim; ++d) {
                const double v = seq.x(t, d);
                if (std::isnan(v)) continue;
                out.record.min[d] = std::min(out.record.min[d], v);
                out.record.max[d] = std::max(out.record.max[d], v);
            }
        }
    }
    for (std::size_t d = 0; d < dim; ++d) {
        if (out.record.min[d] > out.record.max[d]) out.record.min[d] = out.record.max[d] = 0.0;  // nothing observed
    }
    out.data = data;
    for (auto& seq : out.data) out.record.apply(seq.x);
    return out;
}

Sequence to_model_sequence(const LabeledSequence& seq, const ModelSpec& spec) {
    const auto& tracks = spec.tracks();
    if (seq.labels.size() != tracks.size())
        throw SchemaError("sequence '" + seq.id + "' has " + std::to_string(seq.labels.size()) +
                          " label columns, model expects " + std::to_string(tracks.size()));
    LabelTracks raw(tracks.size());
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        std::map<std::string_view, std::size_t> index;
        for (std::size_t l = 0; l < tracks[k].alphabet.size(); ++l) index.emplace(tracks[k].alphabet[l], l);
        for (const auto& value : seq.labels[k]) {
            const auto it = index.find(value);
            if (it == index.end())
                throw InvalidLabel("label '" + value + "' of sequence '" + seq.id + "' is not in the alphabet of '" +
                                   tracks[k].name + "'");
            raw[k].push_back(it->second);
        }
    }
    Sequence out{seq.x, {}};
    out.y = seq.x.rows() == 0 ? LabelTracks(spec.num_categories()) : encode_tracks(spec, raw);
    return out;
}

std::vector<Sequence> to_model_sequences(const Dataset& data, const ModelSpec& spec) {
    std::vector<Sequence> out;
    out.reserve(data.size());
    for (const auto& seq : data) out.push_back(to_model_sequence(seq, spec));
    return out;
}

Dataset select(const Dataset& data, std::span<const std::string> ids) {
    std::unordered_map<std::string_view, std::size_t> where;
    for (std::size_t k = 0; k < data.size(); ++k) where.emplace(data[k].id, k);
    Dataset out;
    for (const auto& id : ids) {
        const auto it = where.find(id);
        if (it == where.end()) throw SchemaError("unknown sequence id '" + id + "'");
        out.push_back(data[it->second]);
    }
    return out;
}

}  // namespace fldcrf
