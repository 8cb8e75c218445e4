#include <cmath>
#include <fstream>
#include <json.hpp>

#include "sumeval/vector_metrics.hpp"

namespace sumeval {

using nlohmann::json;

std::string_view to_string(TextRole role) { return role == TextRole::prediction ? "prediction" : "reference"; }

std::string_view to_string(EmbeddingKind kind) { return kind == EmbeddingKind::sentence ? "sentence" : "tokens"; }

namespace {

const json& require(const json& obj, const char* field, std::size_t line) {
  const auto it = obj.find(field);
  if (it == obj.end()) throw DataError(std::string("missing field '") + field + "'", line);
  return *it;
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) throw DataError(std::string("field '") + field + "' must be a string", line);
  return v.get<std::string>();
}

Eigen::VectorXd parse_numbers(const json& arr, const char* what, std::size_t line) {
  if (!arr.is_array()) throw DataError(std::string(what) + " must be an array of numbers", line);
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw DataError(std::string(what) + " must contain only numbers", line);
    const double x = arr[i].get<double>();
    if (!std::isfinite(x)) throw DataError(std::string(what) + " contains a non-finite value", line);
    v[static_cast<Eigen::Index>(i)] = x;
  }
  return v;
}

}  // namespace

EmbeddingRecord parse_embedding_record(std::string_view json_line, std::size_t line) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!obj.is_object()) throw DataError("record must be a JSON object", line);

  EmbeddingRecord rec;
  rec.item_id = require_string(obj, "id", line);
  if (rec.item_id.empty()) throw DataError("empty id", line);

  const std::string role = require_string(obj, "role", line);
  if (role == "prediction") {
    rec.role = TextRole::prediction;
  } else if (role == "reference") {
    rec.role = TextRole::reference;
  } else {
    throw DataError("role must be 'prediction' or 'reference', got '" + role + "'", line);
  }

  rec.model = require_string(obj, "model", line);
  const std::string kind = require_string(obj, "kind", line);
  if (kind == "sentence") {
    rec.kind = EmbeddingKind::sentence;
    rec.vector = parse_numbers(require(obj, "vector", line), "vector", line);
    if (rec.vector.size() == 0) throw DataError("empty vector", line);
  } else if (kind == "tokens") {
    rec.kind = EmbeddingKind::tokens;
    const json& tokens = require(obj, "tokens", line);
    if (!tokens.is_array()) throw DataError("tokens must be an array of strings", line);
    for (const auto& t : tokens) {
      if (!t.is_string()) throw DataError("tokens must be an array of strings", line);
      rec.tokens.push_back(t.get<std::string>());
    }
    const json& matrix = require(obj, "matrix", line);
    if (!matrix.is_array()) throw DataError("matrix must be an array of rows", line);
    if (matrix.size() != rec.tokens.size()) {
      throw DataError("matrix has " + std::to_string(matrix.size()) + " rows for " +
                          std::to_string(rec.tokens.size()) + " tokens",
                      line);
    }
    Eigen::Index width = -1;
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      const Eigen::VectorXd row = parse_numbers(matrix[r], "matrix row", line);
      if (width < 0) {
        width = row.size();
        if (width == 0) throw DataError("matrix rows must be non-empty", line);
        rec.matrix.resize(static_cast<Eigen::Index>(matrix.size()), width);
      } else if (row.size() != width) {
        throw DataError("matrix rows have unequal widths", line);
      }
      rec.matrix.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
  } else {
    throw DataError("kind must be 'sentence' or 'tokens', got '" + kind + "'", line);
  }
  return rec;
}

std::string format_embedding_record(const EmbeddingRecord& record) {
  json obj;
  obj["id"] = record.item_id;
  obj["role"] = to_string(record.role);
  obj["model"] = record.model;
  obj["kind"] = to_string(record.kind);
  if (record.kind == EmbeddingKind::sentence) {
    obj["vector"] = std::vector<double>(record.vector.data(), record.vector.data() + record.vector.size());
  } else {
    obj["tokens"] = record.tokens;
    json rows = json::array();
    for (Eigen::Index r = 0; r < record.matrix.rows(); ++r) {
      const Eigen::VectorXd row = record.matrix.row(r).transpose();
      rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    obj["matrix"] = std::move(rows);
  }
  return obj.dump();
}

const EmbeddingRecord* EmbeddingStore::find(const std::string& item_id, TextRole role) const {
  const auto it = records_.find({item_id, role});
  return it == records_.end() ? nullptr : &it->second;
}

void EmbeddingStore::insert(EmbeddingRecord record, std::size_t line) {
  if (records_.empty()) {
    model_ = record.model;
  } else if (record.model != model_) {
    throw DataError("model '" + record.model + "' differs from store model '" + model_ + "'", line);
  }
  const Eigen::Index dim = record.dimension();
  if (!dimension_) {
    dimension_ = dim;
  } else if (*dimension_ != dim) {
    throw DataError("dimension mismatch: expected " + std::to_string(*dimension_) + ", got " + std::to_string(dim),
                    line);
  }
  Key key{record.item_id, record.role};
  if (records_.count(key)) {
    throw DataError("duplicate record for id '" + record.item_id + "' role '" +
                        std::string(to_string(record.role)) + "'",
                    line);
  }
  records_.emplace(std::move(key), std::move(record));
}

EmbeddingStore load_embeddings(std::istream& in) {
  EmbeddingStore store;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    store.insert(parse_embedding_record(text, line), line);
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embeddings file '" + path.string() + "'");
  return load_embeddings(in);
}

}  // namespace sumeval
