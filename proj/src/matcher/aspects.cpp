#include "ics/matcher/aspects.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ics/errors.hpp"

namespace ics::matcher {

AttributeMap attributes_from_json(const nlohmann::json& j) {
  AttributeMap out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw SchemaError("<attributes>", "must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) continue;
    if (value.is_number()) out[key] = value.get<double>();
    else if (value.is_string()) out[key] = value.get<std::string>();
    else throw SchemaError(key, "must be a number or a string");
  }
  return out;
}

nlohmann::json attributes_to_json(const AttributeMap& attrs) {
  auto j = nlohmann::json::object();
  for (const auto& [key, value] : attrs) {
    if (const auto* d = std::get_if<double>(&value)) j[key] = *d;
    else j[key] = std::get<std::string>(value);
  }
  return j;
}

AspectSchema::AspectSchema(std::vector<AspectField> fields) : fields_(std::move(fields)) {
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    if (f.name.empty()) throw ConfigError("aspect schema: field names must be non-empty");
    if (!seen.insert(f.name).second) throw ConfigError("aspect schema: duplicate field '" + f.name + "'");
    if (f.kind == AspectField::Kind::kCategorical && f.categories.empty()) {
      throw ConfigError("aspect schema: categorical field '" + f.name + "' has no categories");
    }
    if (f.kind == AspectField::Kind::kNumeric && !(f.max > f.min)) {
      throw ConfigError("aspect schema: numeric field '" + f.name + "' needs max > min");
    }
    length_ += f.width();
  }
}

AspectSchema AspectSchema::default_schema() {
  using K = AspectField::Kind;
  return AspectSchema({
      {"customer_tier", K::kCategorical, {"bronze", "silver", "gold", "platinum"}, 0, 1},
      {"customer_tenure_days", K::kNumeric, {}, 0, 3650},
      {"order_status", K::kCategorical, {"pending", "paid", "shipped", "delivered", "returned", "refunded"}, 0, 1},
      {"order_amount", K::kNumeric, {}, 0, 5000},
      {"staff_skill_group", K::kCategorical, {"general", "logistics", "refunds", "membership", "technical"}, 0, 1},
      {"staff_experience_years", K::kNumeric, {}, 0, 20},
      {"product_category", K::kCategorical, {"apparel", "electronics", "grocery", "home", "beauty"}, 0, 1},
      {"recent_complaints", K::kNumeric, {}, 0, 10},
  });
}

AspectFeatureVector AspectSchema::encode(const AttributeMap& attrs) const {
  for (const auto& [key, value] : attrs) {
    (void)value;
    if (std::none_of(fields_.begin(), fields_.end(), [&](const AspectField& f) { return f.name == key; })) {
      throw SchemaError(key, "not in the aspect schema");
    }
  }
  AspectFeatureVector out;
  out.values.assign(length_, 0.0);
  std::size_t offset = 0;
  for (const auto& f : fields_) {
    const auto missing_slot = offset + f.width() - 1;
    auto it = attrs.find(f.name);
    if (it == attrs.end()) {
      out.values[missing_slot] = 1.0;
    } else if (f.kind == AspectField::Kind::kCategorical) {
      const auto* s = std::get_if<std::string>(&it->second);
      if (!s) throw SchemaError(f.name, "expects a category name");
      auto pos = std::find(f.categories.begin(), f.categories.end(), *s);
      if (pos == f.categories.end()) {
        throw SchemaError(f.name, "has no category '" + *s + "'");
      }
      out.values[offset + static_cast<std::size_t>(pos - f.categories.begin())] = 1.0;
    } else {
      const auto* d = std::get_if<double>(&it->second);
      if (!d) throw SchemaError(f.name, "expects a number");
      if (!std::isfinite(*d)) throw SchemaError(f.name, "is not finite");
      // Scaled into [0, 1]; out-of-range values saturate.
      out.values[offset] = std::clamp((*d - f.min) / (f.max - f.min), 0.0, 1.0);
    }
    offset += f.width();
  }
  return out;
}

nlohmann::json AspectSchema::to_json() const {
  auto fields = nlohmann::json::array();
  for (const auto& f : fields_) {
    if (f.kind == AspectField::Kind::kCategorical) {
      fields.push_back({{"name", f.name}, {"kind", "categorical"}, {"categories", f.categories}});
    } else {
      fields.push_back({{"name", f.name}, {"kind", "numeric"}, {"min", f.min}, {"max", f.max}});
    }
  }
  return {{"fields", fields}};
}

AspectSchema AspectSchema::from_json(const nlohmann::json& j) {
  std::vector<AspectField> fields;
  for (const auto& jf : j.at("fields")) {
    AspectField f;
    f.name = jf.at("name").get<std::string>();
    const auto kind = jf.at("kind").get<std::string>();
    if (kind == "categorical") {
      f.kind = AspectField::Kind::kCategorical;
      f.categories = jf.at("categories").get<std::vector<std::string>>();
    } else if (kind == "numeric") {
      f.kind = AspectField::Kind::kNumeric;
      f.min = jf.at("min").get<double>();
      f.max = jf.at("max").get<double>();
    } else {
      throw ConfigError("aspect schema: field '" + f.name + "' has unknown kind '" + kind + "'");
    }
    fields.push_back(std::move(f));
  }
  return AspectSchema(std::move(fields));
}

}  // namespace ics::matcher
