#include "zeta/kb.hpp"

#include "zeta/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace zeta {

using nlohmann::json;

knowledge_base::knowledge_base(std::vector<concept_def> concepts,
                               std::vector<attribute_def> attributes,
                               std::vector<relation> relations)
    : concepts_(std::move(concepts)),
      attributes_(std::move(attributes)),
      relations_(std::move(relations))
{
    for (std::size_t i = 0; i < concepts_.size(); ++i) {
        const auto& id = concepts_[i].id;
        if (id.empty())
            throw ValidationError("concept #" + std::to_string(i) + " has an empty id");
        if (!concept_ids_.emplace(id, i).second)
            throw ValidationError("duplicate concept id '" + id + "'");
    }
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
        const auto& id = attributes_[i].id;
        if (id.empty())
            throw ValidationError("attribute #" + std::to_string(i) + " has an empty id");
        if (!attribute_ids_.emplace(id, i).second)
            throw ValidationError("duplicate attribute id '" + id + "'");
    }

    incidence_ = incidence_matrix::Constant(static_cast<Eigen::Index>(attributes_.size()),
                                            static_cast<Eigen::Index>(concepts_.size()), false);
    for (const auto& [attr, con] : relations_) {
        const auto a = attribute_ids_.find(attr);
        if (a == attribute_ids_.end())
            throw ValidationError("relation (" + attr + ", " + con + ") references unknown attribute '" + attr + "'");
        const auto c = concept_ids_.find(con);
        if (c == concept_ids_.end())
            throw ValidationError("relation (" + attr + ", " + con + ") references unknown concept '" + con + "'");
        bool& cell = incidence_(static_cast<Eigen::Index>(a->second), static_cast<Eigen::Index>(c->second));
        if (cell)
            throw ValidationError("duplicate relation (" + attr + ", " + con + ")");
        cell = true;
    }
}

std::optional<std::size_t> knowledge_base::find_concept(std::string_view id) const
{
    const auto it = concept_ids_.find(std::string(id));
    if (it == concept_ids_.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::size_t> knowledge_base::find_attribute(std::string_view id) const
{
    const auto it = attribute_ids_.find(std::string(id));
    if (it == attribute_ids_.end())
        return std::nullopt;
    return it->second;
}

std::size_t knowledge_base::concept_index(std::string_view id) const
{
    if (auto i = find_concept(id))
        return *i;
    throw UnknownId("unknown concept '" + std::string(id) + "'");
}

std::size_t knowledge_base::attribute_index(std::string_view id) const
{
    if (auto i = find_attribute(id))
        return *i;
    throw UnknownId("unknown attribute '" + std::string(id) + "'");
}

namespace {

std::string entry_string(const json& obj, const char* key, const std::string& where)
{
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ParseError(where + ": missing \"" + key + "\"");
    if (!it->is_string())
        throw ParseError(where + ": \"" + key + "\" must be a string");
    return it->get<std::string>();
}

template <typename Def>
std::vector<Def> parse_entries(const json& doc, const char* section)
{
    const auto& arr = doc.at(section);
    if (!arr.is_array())
        throw ParseError(std::string("\"") + section + "\" must be an array");
    std::vector<Def> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto where = std::string(section) + "[" + std::to_string(i) + "]";
        const auto& e = arr[i];
        if (!e.is_object())
            throw ParseError(where + " must be an object");
        for (const auto& [key, _] : e.items())
            if (key != "id" && key != "label")
                throw ParseError(where + ": unknown key \"" + key + "\"");
        Def def;
        def.id = entry_string(e, "id", where);
        def.label = e.contains("label") ? entry_string(e, "label", where) : def.id;
        out.push_back(std::move(def));
    }
    return out;
}

knowledge_base from_json(const json& doc)
{
    if (!doc.is_object())
        throw ParseError("knowledge base must be a JSON object");
    for (const auto& [key, _] : doc.items())
        if (key != "concepts" && key != "attributes" && key != "relations")
            throw ParseError("unknown top-level key \"" + key + "\"");
    for (const char* key : {"concepts", "attributes", "relations"})
        if (!doc.contains(key))
            throw ParseError(std::string("missing top-level key \"") + key + "\"");

    auto concepts = parse_entries<concept_def>(doc, "concepts");
    auto attributes = parse_entries<attribute_def>(doc, "attributes");

    const auto& rels = doc.at("relations");
    if (!rels.is_array())
        throw ParseError("\"relations\" must be an array");
    std::vector<relation> relations;
    relations.reserve(rels.size());
    for (std::size_t i = 0; i < rels.size(); ++i) {
        const auto& r = rels[i];
        if (!r.is_array() || r.size() != 2 || !r[0].is_string() || !r[1].is_string())
            throw ParseError("relations[" + std::to_string(i) + "] must be a pair of strings");
        relations.emplace_back(r[0].get<std::string>(), r[1].get<std::string>());
    }
    return knowledge_base(std::move(concepts), std::move(attributes), std::move(relations));
}

json to_json(const knowledge_base& kb)
{
    json doc = json::object();
    auto& concepts = doc["concepts"] = json::array();
    for (const auto& c : kb.concepts())
        concepts.push_back({{"id", c.id}, {"label", c.label}});
    auto& attributes = doc["attributes"] = json::array();
    for (const auto& a : kb.attributes())
        attributes.push_back({{"id", a.id}, {"label", a.label}});
    auto& relations = doc["relations"] = json::array();
    for (const auto& [a, c] : kb.relations())
        relations.push_back({a, c});
    return doc;
}

} // namespace

knowledge_base load_kb(std::istream& source)
{
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    return from_json(doc);
}

knowledge_base load_kb(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return load_kb(in);
}

knowledge_base load_kb_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open knowledge base '" + path.string() + "'");
    return load_kb(in);
}

void write_kb(const knowledge_base& kb, std::ostream& out)
{
    out << to_json(kb).dump(2) << '\n';
}

std::string to_json_text(const knowledge_base& kb)
{
    std::ostringstream out;
    write_kb(kb, out);
    return out.str();
}

bool is_related(const knowledge_base& kb, std::string_view attribute, std::string_view concept_id)
{
    return kb.related(kb.attribute_index(attribute), kb.concept_index(concept_id));
}

std::vector<std::string> related_attribute_set(const knowledge_base& kb, std::string_view concept_id)
{
    const auto column = kb.concept_column(kb.concept_index(concept_id));
    std::vector<std::string> out;
    for (Eigen::Index a = 0; a < column.size(); ++a)
        if (column(a))
            out.push_back(kb.attributes()[static_cast<std::size_t>(a)].id);
    return out;
}

} // namespace zeta
