#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace ics::matcher {

using AttributeValue = std::variant<double, std::string>;
// Raw customer / staff / order attributes keyed by schema field name.
using AttributeMap = std::map<std::string, AttributeValue>;

AttributeMap attributes_from_json(const nlohmann::json& j);
nlohmann::json attributes_to_json(const AttributeMap& attrs);

struct AspectField {
  enum class Kind { kCategorical, kNumeric };

  std::string name;
  Kind kind = Kind::kNumeric;
  std::vector<std::string> categories;  // categorical only
  double min = 0.0;                     // numeric only
  double max = 1.0;

  // Categorical: one slot per category plus a missing slot.
  // Numeric: scaled value plus a missing slot.
  std::size_t width() const noexcept { return kind == Kind::kCategorical ? categories.size() + 1 : 2; }
};

struct AspectFeatureVector {
  std::vector<double> values;
};

class AspectSchema {
 public:
  AspectSchema() = default;
  explicit AspectSchema(std::vector<AspectField> fields);

  // Customer tier/tenure/complaints, order status/amount/category and staff
  // skill group/experience; 32 slots.
  static AspectSchema default_schema();

  const std::vector<AspectField>& fields() const noexcept { return fields_; }
  std::size_t length() const noexcept { return length_; }

  // Missing fields encode as zeros with their missing slot set. Unknown
  // fields, unknown categories and type mismatches throw SchemaError naming
  // the field.
  AspectFeatureVector encode(const AttributeMap& attrs) const;

  nlohmann::json to_json() const;
  static AspectSchema from_json(const nlohmann::json& j);

 private:
  std::vector<AspectField> fields_;
  std::size_t length_ = 0;
};

}  // namespace ics::matcher
