#include "tmcsim/open_data.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "tmcsim/error.hpp"
#include "xml_sax.hpp"

namespace tmcsim {

using nlohmann::json;

OpenDataConfig OpenDataConfig::from_json(std::string_view json_text) {
  OpenDataConfig config;
  config.schema = SchemaMapping::from_json(json_text);
  try {
    const auto doc = json::parse(json_text);
    const auto api = doc.value("api", json::object());
    config.base_url = api.value("base_url", config.base_url);
    config.resource_id = api.value("resource_id", config.resource_id);
    config.page_size = api.value("page_size", config.page_size);
    config.numeric_ids = api.value("numeric_ids", config.numeric_ids);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::invalid_input, std::string("open data config: ") + e.what());
  }
  if (config.page_size <= 0) {
    throw Error(ErrorCategory::invalid_input, "open data config: page_size must be positive");
  }
  return config;
}

namespace {

std::string cell_text(const json& value) {
  if (value.is_null()) return {};
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer() || value.is_number_unsigned()) return value.dump();
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9e15) {
      return std::to_string(static_cast<long long>(d));
    }
    return detail::format_number(d);
  }
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

json id_filter(const std::vector<std::string>& ids, bool numeric) {
  const bool all_integral = numeric && std::all_of(ids.begin(), ids.end(), [](const auto& id) {
    return !id.empty() && id.size() < 19 &&
           std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; });
  });
  json values = json::array();
  for (const auto& id : ids) {
    if (all_integral) {
      values.push_back(std::stoll(id));
    } else {
      values.push_back(id);
    }
  }
  return values;
}

std::vector<std::string> required_columns(const SchemaMapping& schema) {
  std::vector<std::string> cols = {schema.id_column, schema.timestamp_column};
  for (const auto& [key, column] : schema.movement_columns) {
    if (column) cols.push_back(*column);
  }
  return cols;
}

}  // namespace

TmcDataset fetch_toronto_tmc(const std::vector<std::string>& ids, HttpFetcher& http,
                             const OpenDataConfig& config) {
  if (config.resource_id.empty()) {
    throw Error(ErrorCategory::invalid_input,
                "open data resource_id is not configured (set api.resource_id in the source config)");
  }
  if (ids.empty()) throw Error(ErrorCategory::invalid_input, "no intersection ids to fetch");

  const json filters = {{config.schema.id_column, id_filter(ids, config.numeric_ids)}};
  const std::string filter_param = url_encode(filters.dump());

  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  for (long long offset = 0;; offset += config.page_size) {
    const std::string url = config.base_url + "/api/3/action/datastore_search?resource_id=" +
                            url_encode(config.resource_id) +
                            "&limit=" + std::to_string(config.page_size) +
                            "&offset=" + std::to_string(offset) + "&filters=" + filter_param;
    const HttpResponse response = http.get(url);
    if (response.status < 200 || response.status >= 300) {
      throw Error(ErrorCategory::http_status, "open data API answered HTTP " +
                                                  std::to_string(response.status) + " for " + url);
    }
    json doc;
    try {
      doc = json::parse(response.body);
    } catch (const json::exception& e) {
      throw Error(ErrorCategory::schema_drift, std::string("open data API returned non-JSON: ") + e.what());
    }
    if (!doc.value("success", false)) {
      const auto error = doc.contains("error") ? doc["error"].dump() : std::string("no details");
      throw Error(ErrorCategory::http_status, "open data API reported failure: " + error);
    }
    if (!doc.contains("result") || !doc["result"].is_object() ||
        !doc["result"].contains("records") || !doc["result"]["records"].is_array()) {
      throw Error(ErrorCategory::schema_drift, "open data API payload lacks result.records");
    }
    const json& result = doc["result"];

    if (columns.empty()) {
      if (result.contains("fields") && result["fields"].is_array()) {
        for (const auto& field : result["fields"]) columns.push_back(field.value("id", ""));
      } else if (!result["records"].empty()) {
        for (const auto& item : result["records"].front().items()) columns.push_back(item.key());
      }
      if (!columns.empty()) {
        const std::set<std::string> present(columns.begin(), columns.end());
        for (const auto& column : required_columns(config.schema)) {
          if (!present.contains(column)) {
            throw Error(ErrorCategory::schema_drift,
                        "open data payload is missing expected column '" + column + "'");
          }
        }
      }
    }

    const auto& records = result["records"];
    for (const auto& record : records) {
      std::vector<std::string> row;
      row.reserve(columns.size());
      for (const auto& column : columns) {
        row.push_back(record.contains(column) ? cell_text(record[column]) : std::string{});
      }
      rows.push_back(std::move(row));
    }

    const auto received = static_cast<long long>(records.size());
    const long long total = result.value("total", -1LL);
    if (received < config.page_size) break;
    if (total >= 0 && offset + received >= total) break;
  }

  if (columns.empty()) {
    // no fields and no records: nothing matched
    TmcDataset empty;
    empty.schema = config.schema;
    return empty;
  }
  return build_tmc_dataset(columns, rows, config.schema);
}

}  // namespace tmcsim
