#include "asdscreen/privacy.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "asdscreen/crypto.hpp"
#include "asdscreen/errors.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace asdscreen {

size_t QuasiIdentifierTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw SchemaError("unknown column '" + name + "'");
}

QuasiIdentifierTable read_csv_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  auto parse_line = [&](const std::string& line, size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(ch);
        }
      } else if (ch == '"' && field.empty()) {
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(ch);
      }
    }
    if (quoted) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": unterminated quote");
    }
    fields.push_back(std::move(field));
    return fields;
  };

  QuasiIdentifierTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = parse_line(line, line_no);
    if (table.columns.empty()) {
      table.columns = std::move(fields);
    } else {
      if (fields.size() != table.columns.size()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(table.columns.size()) + " fields, got " +
                         std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.columns.empty()) {
    throw ParseError(path.string() + ": missing header row");
  }
  return table;
}

QuasiIdentifierTable table_from_manifest(const DatasetManifest& manifest) {
  QuasiIdentifierTable table;
  table.columns = {"sample_id", "subject", "path", "label", "modality", "split"};
  std::set<std::string> attr_keys;
  for (const auto& r : manifest.records) {
    for (const auto& [k, v] : r.attributes) attr_keys.insert(k);
  }
  for (const auto& k : attr_keys) table.columns.push_back(k);

  for (const auto& r : manifest.records) {
    std::vector<std::string> row = {r.sample_id,
                                    r.subject,
                                    r.path,
                                    std::to_string(r.label),
                                    to_string(r.modality),
                                    to_string(r.split)};
    for (const auto& k : attr_keys) {
      auto it = r.attributes.find(k);
      row.push_back(it == r.attributes.end() ? std::string() : it->second);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

// Maps each row to its equivalence class; iteration order is the sorted
// quasi-identifier tuple, which keeps violation lists deterministic.
std::map<std::vector<std::string>, std::vector<size_t>> group_by_qi(
    const QuasiIdentifierTable& table) {
  std::vector<size_t> qi_idx;
  qi_idx.reserve(table.quasi_identifiers.size());
  for (const auto& name : table.quasi_identifiers) {
    qi_idx.push_back(table.column_index(name));
  }
  if (qi_idx.empty()) {
    throw SchemaError("no quasi-identifier columns selected");
  }
  std::map<std::vector<std::string>, std::vector<size_t>> classes;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<std::string> key;
    key.reserve(qi_idx.size());
    for (size_t i : qi_idx) key.push_back(table.rows[r][i]);
    classes[std::move(key)].push_back(r);
  }
  return classes;
}

}  // namespace

AuditResult k_anonymity(const QuasiIdentifierTable& table, size_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (table.rows.empty()) throw ValueError("k-anonymity needs a nonempty table");
  AuditResult result;
  for (const auto& [key, rows] : group_by_qi(table)) {
    if (rows.size() < k) {
      result.violations.push_back({key, rows.size()});
    }
  }
  result.pass = result.violations.empty();
  return result;
}

AuditResult l_diversity(const QuasiIdentifierTable& table, size_t l) {
  if (l < 1) throw ConfigError("l must be >= 1");
  if (table.rows.empty()) throw ValueError("l-diversity needs a nonempty table");
  if (!table.sensitive_column) {
    throw SchemaError("l-diversity needs a sensitive column");
  }
  const size_t sensitive = table.column_index(*table.sensitive_column);
  AuditResult result;
  for (const auto& [key, rows] : group_by_qi(table)) {
    std::set<std::string> values;
    for (size_t r : rows) values.insert(table.rows[r][sensitive]);
    if (values.size() < l) {
      result.violations.push_back({key, values.size()});
    }
  }
  result.pass = result.violations.empty();
  return result;
}

AuditResult t_closeness(const QuasiIdentifierTable&, double) {
  throw Error(
      "t-closeness is not implemented: no distance measure over sensitive values "
      "is defined here; run k-anonymity and l-diversity instead");
}

namespace {

constexpr char kSealMagic[4] = {'A', 'S', 'D', 'S'};
constexpr uint8_t kSealVersion = 1;
constexpr uint8_t kSchemeAes256Gcm = 1;
constexpr size_t kNonceLen = 12;
constexpr size_t kTagLen = 16;
constexpr size_t kHeaderLen = 4 + 1 + 1 + kNonceLen;

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

void check_key(std::span<const uint8_t> key) {
  if (key.size() != 32) {
    throw ConfigError("seal/unseal key must be exactly 32 bytes, got " +
                      std::to_string(key.size()));
  }
}

}  // namespace

std::vector<uint8_t> seal(std::span<const uint8_t> payload, std::span<const uint8_t> key32) {
  check_key(key32);
  const std::vector<uint8_t> nonce = random_bytes(kNonceLen);

  std::vector<uint8_t> out(kHeaderLen + kTagLen + payload.size());
  std::copy(kSealMagic, kSealMagic + 4, out.begin());
  out[4] = kSealVersion;
  out[5] = kSchemeAes256Gcm;
  std::copy(nonce.begin(), nonce.end(), out.begin() + 6);

  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("cipher context allocation failed");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key32.data(),
                         nonce.data()) != 1) {
    throw Error("cipher init failed");
  }
  int len = 0;
  // Header (including the nonce) is authenticated as associated data.
  if (EVP_EncryptUpdate(ctx.get(), nullptr, &len, out.data(), kHeaderLen) != 1) {
    throw Error("cipher aad failed");
  }
  if (!payload.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data() + kHeaderLen + kTagLen, &len,
                        payload.data(), static_cast<int>(payload.size())) != 1) {
    throw Error("encryption failed");
  }
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kHeaderLen + kTagLen + payload.size(),
                          &len) != 1) {
    throw Error("encryption finalize failed");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen,
                          out.data() + kHeaderLen) != 1) {
    throw Error("tag extraction failed");
  }
  return out;
}

std::vector<uint8_t> unseal(std::span<const uint8_t> container,
                            std::span<const uint8_t> key32) {
  check_key(key32);
  if (container.size() < kHeaderLen + kTagLen ||
      !std::equal(kSealMagic, kSealMagic + 4, container.begin()) ||
      container[4] != kSealVersion || container[5] != kSchemeAes256Gcm) {
    throw AuthenticationError("container malformed or tampered");
  }
  const uint8_t* nonce = container.data() + 6;
  const uint8_t* tag = container.data() + kHeaderLen;
  const uint8_t* ciphertext = container.data() + kHeaderLen + kTagLen;
  const size_t ct_len = container.size() - kHeaderLen - kTagLen;

  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error("cipher context allocation failed");
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key32.data(), nonce) != 1) {
    throw Error("cipher init failed");
  }
  int len = 0;
  if (EVP_DecryptUpdate(ctx.get(), nullptr, &len, container.data(), kHeaderLen) != 1) {
    throw Error("cipher aad failed");
  }
  std::vector<uint8_t> plain(ct_len);
  if (ct_len > 0 &&
      EVP_DecryptUpdate(ctx.get(), plain.data(), &len, ciphertext,
                        static_cast<int>(ct_len)) != 1) {
    throw AuthenticationError("container malformed or tampered");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen,
                          const_cast<uint8_t*>(tag)) != 1) {
    throw Error("tag set failed");
  }
  uint8_t dummy;
  if (EVP_DecryptFinal_ex(ctx.get(), &dummy, &len) != 1) {
    // Authentication failed; release nothing.
    throw AuthenticationError("container failed authentication (wrong key or tampered)");
  }
  return plain;
}

std::string to_string(Action a) {
  switch (a) {
    case Action::read: return "read";
    case Action::write: return "write";
    case Action::export_data: return "export";
  }
  throw ValueError("unknown action");
}

std::string to_string(ArtifactClass c) {
  switch (c) {
    case ArtifactClass::manifests: return "manifests";
    case ArtifactClass::checkpoints: return "checkpoints";
    case ArtifactClass::reports: return "reports";
  }
  throw ValueError("unknown artifact class");
}

Action action_from_string(const std::string& s) {
  if (s == "read") return Action::read;
  if (s == "write") return Action::write;
  if (s == "export") return Action::export_data;
  throw ParseError("unknown action '" + s + "'");
}

ArtifactClass artifact_class_from_string(const std::string& s) {
  if (s == "manifests") return ArtifactClass::manifests;
  if (s == "checkpoints") return ArtifactClass::checkpoints;
  if (s == "reports") return ArtifactClass::reports;
  throw ParseError("unknown artifact class '" + s + "'");
}

RolePolicy RolePolicy::from_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open policy " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  RolePolicy policy;
  for (auto role = j.begin(); role != j.end(); ++role) {
    for (auto cls = role.value().begin(); cls != role.value().end(); ++cls) {
      artifact_class_from_string(cls.key());  // validate
      for (const auto& action : cls.value()) {
        action_from_string(action.get<std::string>());  // validate
        policy.grants[role.key()][cls.key()].insert(action.get<std::string>());
      }
    }
  }
  return policy;
}

bool RolePolicy::allows(const std::string& role, Action action,
                        ArtifactClass artifact) const {
  auto role_it = grants.find(role);
  if (role_it == grants.end()) return false;
  auto cls_it = role_it->second.find(to_string(artifact));
  if (cls_it == role_it->second.end()) return false;
  return cls_it->second.contains(to_string(action));
}

namespace {

std::string entry_payload(const AccessLogEntry& e) {
  ordered_json j;
  j["timestamp"] = e.timestamp;
  j["actor"] = e.actor;
  j["action"] = e.action;
  j["artifact"] = e.artifact;
  j["outcome"] = e.outcome;
  return j.dump();
}

std::string chain_hash(const std::string& prev_hash, const AccessLogEntry& e) {
  return sha256_hex(prev_hash + "\n" + entry_payload(e));
}

AccessLogEntry entry_from_json(const ordered_json& j, size_t line_no,
                               const fs::path& path) {
  try {
    AccessLogEntry e;
    e.timestamp = j.at("timestamp").get<std::string>();
    e.actor = j.at("actor").get<std::string>();
    e.action = j.at("action").get<std::string>();
    e.artifact = j.at("artifact").get<std::string>();
    e.outcome = j.at("outcome").get<std::string>();
    e.prev_hash = j.at("prev_hash").get<std::string>();
    e.entry_hash = j.at("entry_hash").get<std::string>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
  }
}

}  // namespace

std::vector<AccessLogEntry> AccessLog::read(const fs::path& path) {
  std::vector<AccessLogEntry> entries;
  std::ifstream in(path);
  if (!in) return entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    entries.push_back(entry_from_json(j, line_no, path));
  }
  return entries;
}

void AccessLog::verify(const fs::path& path) {
  const auto entries = read(path);
  std::string prev = kGenesisHash;
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.prev_hash != prev) {
      throw IntegrityError("access log " + path.string() + ": entry " +
                           std::to_string(i + 1) +
                           " breaks the chain (entry removed or reordered)");
    }
    if (chain_hash(e.prev_hash, e) != e.entry_hash) {
      throw IntegrityError("access log " + path.string() + ": entry " +
                           std::to_string(i + 1) + " was altered");
    }
    prev = e.entry_hash;
  }
}

AccessLog::AccessLog(fs::path path) : path_(std::move(path)), last_hash_(kGenesisHash) {
  if (fs::exists(path_)) {
    verify(path_);  // IntegrityError before any append lands on a broken chain
    const auto entries = read(path_);
    if (!entries.empty()) last_hash_ = entries.back().entry_hash;
  }
}

AccessLogEntry AccessLog::append(const std::string& actor, Action action,
                                 const std::string& artifact, bool allowed) {
  std::lock_guard<std::mutex> lock(mutex_);
  AccessLogEntry e;
  e.timestamp = now_iso8601();
  e.actor = actor;
  e.action = to_string(action);
  e.artifact = artifact;
  e.outcome = allowed ? "allowed" : "denied";
  e.prev_hash = last_hash_;
  e.entry_hash = chain_hash(e.prev_hash, e);

  ordered_json j;
  j["timestamp"] = e.timestamp;
  j["actor"] = e.actor;
  j["action"] = e.action;
  j["artifact"] = e.artifact;
  j["outcome"] = e.outcome;
  j["prev_hash"] = e.prev_hash;
  j["entry_hash"] = e.entry_hash;

  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to access log " + path_.string());
  out << j.dump() << "\n";
  out.flush();
  if (!out) throw IoError("append failed for access log " + path_.string());
  last_hash_ = e.entry_hash;
  return e;
}

bool authorize(const RolePolicy& policy, AccessLog& log, const std::string& actor,
               Action action, ArtifactClass artifact, const std::string& artifact_path) {
  const bool allowed = policy.allows(actor, action, artifact);
  log.append(actor, action, artifact_path, allowed);
  return allowed;
}

AnonymizationAudit anonymization_audit(const DatasetManifest& manifest,
                                       const std::vector<std::string>& original_names) {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  std::vector<std::pair<std::string, std::string>> needles;  // (lowered, original)
  needles.reserve(original_names.size());
  for (const auto& n : original_names) {
    if (!n.empty()) needles.emplace_back(lower(n), n);
  }

  AnonymizationAudit audit;
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    std::vector<std::pair<std::string, std::string>> fields = {
        {"sample_id", r.sample_id},
        {"subject", r.subject},
        {"path", r.path},
        {"modality", to_string(r.modality)},
        {"split", to_string(r.split)},
    };
    for (const auto& [k, v] : r.attributes) {
      fields.emplace_back("attributes." + k, k + "=" + v);
    }
    for (const auto& [field, value] : fields) {
      const std::string haystack = lower(value);
      for (const auto& [needle, original] : needles) {
        if (haystack.find(needle) != std::string::npos) {
          audit.findings.push_back({i, field, original});
        }
      }
    }
  }
  audit.pass = audit.findings.empty();
  return audit;
}

}  // namespace asdscreen
