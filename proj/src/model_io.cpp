#include "fldcrf/model_io.hpp"

#include <fstream>

#include "fldcrf/error.hpp"
#include "json.hpp"

namespace fldcrf {

using Json = nlohmann::ordered_json;

namespace {

Json spec_to_json(const ModelSpec& spec) {
    const SpecDescription& d = spec.description();
    Json tracks = Json::array();
    for (const auto& t : d.tracks) tracks.push_back({{"name", t.name}, {"alphabet", t.alphabet}});
    Json links = Json::array();
    for (const auto& l : d.influence_links) links.push_back({l.from_layer, l.to_layer, l.lag});
    return {
        {"kind", std::string(to_string(d.kind))},
        {"tracks", tracks},
        {"encoding", d.encoding == CategoryEncoding::per_track ? "per_track" : "cross_product"},
        {"category_of_layer", d.category_of_layer},
        {"states_per_label", d.states_per_label},
        {"influence_links", links},
        {"feature_masks", d.feature_masks},
        {"feature_dim", d.feature_dim},
    };
}

ModelSpec spec_from_json(const Json& j) {
    SpecDescription d;
    d.kind = parse_model_kind(j.at("kind").get<std::string>());
    for (const auto& t : j.at("tracks")) d.tracks.push_back({t.at("name").get<std::string>(), t.at("alphabet").get<std::vector<std::string>>()});
    const std::string enc = j.at("encoding").get<std::string>();
    if (enc == "per_track")
        d.encoding = CategoryEncoding::per_track;
    else if (enc == "cross_product")
        d.encoding = CategoryEncoding::cross_product;
    else
        throw ParseError("unknown category encoding '" + enc + "'");
    d.category_of_layer = j.at("category_of_layer").get<std::vector<std::size_t>>();
    d.states_per_label = j.at("states_per_label").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& l : j.at("influence_links")) {
        if (!l.is_array() || l.size() != 3) throw ParseError("influence link must be [from, to, lag]");
        d.influence_links.push_back({l[0].get<std::size_t>(), l[1].get<std::size_t>(), l[2].get<unsigned>()});
    }
    d.feature_masks = j.at("feature_masks").get<std::vector<std::vector<std::size_t>>>();
    d.feature_dim = j.at("feature_dim").get<std::size_t>();
    return ModelSpec(std::move(d));
}

}  // namespace

void write_model(std::ostream& out, const ModelDocument& doc) {
    const Json j = {
        {"format", "fldcrf-model"},
        {"version", kModelFormatVersion},
        {"setting", doc.setting},
        {"spec", spec_to_json(doc.spec)},
        {"schema",
         {{"id_column", doc.schema.id_column},
          {"time_column", doc.schema.time_column},
          {"feature_columns", doc.schema.feature_columns},
          {"label_columns", doc.schema.label_columns}}},
        {"normalization", {{"min", doc.normalization.min}, {"max", doc.normalization.max}}},
        {"parameters", doc.theta},
    };
    out << j.dump(2) << '\n';
}

void save_model(const std::string& path, const ModelDocument& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_model(out, doc);
}

ModelDocument read_model(std::istream& in) {
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("model document is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", "") != "fldcrf-model") throw ParseError("not a model document");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion)
            throw VersionMismatch("model format version " + std::to_string(version) + ", expected " +
                                  std::to_string(kModelFormatVersion));
        ModelSpec spec = spec_from_json(j.at("spec"));
        CsvSchema schema;
        const Json& s = j.at("schema");
        schema.id_column = s.at("id_column").get<std::string>();
        schema.time_column = s.at("time_column").get<std::string>();
        schema.feature_columns = s.at("feature_columns").get<std::vector<std::string>>();
        schema.label_columns = s.at("label_columns").get<std::vector<std::string>>();
        MinMaxRecord record{j.at("normalization").at("min").get<std::vector<double>>(),
                            j.at("normalization").at("max").get<std::vector<double>>()};
        ParameterVector theta = j.at("parameters").get<ParameterVector>();

        if (theta.size() != ParameterLayout(spec).size())
            throw DimensionMismatch("model has " + std::to_string(theta.size()) + " parameters, spec needs " +
                                    std::to_string(ParameterLayout(spec).size()));
        if (schema.feature_columns.size() != spec.feature_dim() || record.min.size() != spec.feature_dim() ||
            record.max.size() != spec.feature_dim())
            throw DimensionMismatch("schema or normalization width differs from the feature dimension");
        if (schema.label_columns.size() != spec.tracks().size())
            throw DimensionMismatch("schema label columns differ from the model's label tracks");
        return {std::move(spec), std::move(theta), std::move(record), std::move(schema), j.value("setting", "")};
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed model document: ") + e.what());
    }
}

ModelDocument load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_model(in);
}

}  // namespace fldcrf
