#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tmcsim/http.hpp"
#include "tmcsim/tmc.hpp"

namespace tmcsim {

/// Connection settings for a CKAN datastore resource (the City of Toronto
/// portal by default). All values come from configuration.
struct OpenDataConfig {
  std::string base_url = "https://ckan0.cf.opendata.inter.prod-toronto.ca";
  std::string resource_id;
  int page_size = 1000;
  // Send ids as JSON numbers in the filter when they are all integral.
  bool numeric_ids = true;
  SchemaMapping schema;

  /// Reads {"api": {...}, "schema": {...}}; see config/toronto_tmc.json.
  static OpenDataConfig from_json(std::string_view json_text);
};

/// Queries `datastore_search` filtered to `ids`, following offset pagination
/// until a short page. Errors: Error{transport} from the fetcher,
/// Error{http_status} for non-2xx or `success: false`, Error{schema_drift}
/// when the payload lacks a column the schema needs.
TmcDataset fetch_toronto_tmc(const std::vector<std::string>& ids, HttpFetcher& http,
                             const OpenDataConfig& config);

}  // namespace tmcsim
