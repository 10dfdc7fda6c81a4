#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace zeta {

// A secret component, e.g. "yellow".
struct concept_def {
    std::string id;
    std::string label;

    bool operator==(const concept_def&) const = default;
};

// A challenge item, e.g. "sunflower".
struct attribute_def {
    std::string id;
    std::string label;

    bool operator==(const attribute_def&) const = default;
};

// (attribute id, concept id)
using relation = std::pair<std::string, std::string>;

// One boolean per attribute, in attribute declaration order.
using truth_vector = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Bipartite attribute/concept relation. Rows are attributes, columns are
// concepts. Immutable once constructed; construction validates.
class knowledge_base {
public:
    using incidence_matrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

    knowledge_base() = default;

    // Throws ValidationError naming the offending entity.
    knowledge_base(std::vector<concept_def> concepts,
                   std::vector<attribute_def> attributes,
                   std::vector<relation> relations);

    const std::vector<concept_def>& concepts() const noexcept { return concepts_; }
    const std::vector<attribute_def>& attributes() const noexcept { return attributes_; }
    const std::vector<relation>& relations() const noexcept { return relations_; }

    std::size_t concept_count() const noexcept { return concepts_.size(); }
    std::size_t attribute_count() const noexcept { return attributes_.size(); }
    std::size_t relation_count() const noexcept { return relations_.size(); }
    bool empty() const noexcept { return attributes_.empty() && concepts_.empty(); }

    std::optional<std::size_t> find_concept(std::string_view id) const;
    std::optional<std::size_t> find_attribute(std::string_view id) const;

    // Throw UnknownId.
    std::size_t concept_index(std::string_view id) const;
    std::size_t attribute_index(std::string_view id) const;

    bool related(std::size_t attribute, std::size_t concept_idx) const
    {
        return incidence_(static_cast<Eigen::Index>(attribute),
                          static_cast<Eigen::Index>(concept_idx));
    }

    const incidence_matrix& incidence() const noexcept { return incidence_; }

    // Which attributes relate to the concept; length attribute_count().
    auto concept_column(std::size_t concept_idx) const
    {
        return incidence_.col(static_cast<Eigen::Index>(concept_idx));
    }

    friend bool operator==(const knowledge_base& a, const knowledge_base& b)
    {
        return a.concepts_ == b.concepts_ && a.attributes_ == b.attributes_ &&
               a.relations_ == b.relations_;
    }

private:
    std::vector<concept_def> concepts_;
    std::vector<attribute_def> attributes_;
    std::vector<relation> relations_;
    std::unordered_map<std::string, std::size_t> concept_ids_;
    std::unordered_map<std::string, std::size_t> attribute_ids_;
    incidence_matrix incidence_;
};

// Reads the JSON knowledge-base format:
//   {"concepts":[{"id","label"}...], "attributes":[{"id","label"}...],
//    "relations":[["attr_id","concept_id"]...]}
// Throws ParseError for malformed documents, ValidationError for
// structurally invalid ones.
knowledge_base load_kb(std::istream& source);
knowledge_base load_kb(std::string_view text);
knowledge_base load_kb_file(const std::filesystem::path& path);

void write_kb(const knowledge_base& kb, std::ostream& out);
std::string to_json_text(const knowledge_base& kb);

// Throws UnknownId if either id is absent.
bool is_related(const knowledge_base& kb, std::string_view attribute, std::string_view concept_id);

// Attributes related to the concept, in declaration order. Throws UnknownId.
std::vector<std::string> related_attribute_set(const knowledge_base& kb, std::string_view concept_id);

} // namespace zeta
