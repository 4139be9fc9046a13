#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "asdscreen/manifest.hpp"

namespace asdscreen {

// Flat categorical table carrying the quasi-identifier columns under audit
// and optionally one sensitive column.
struct QuasiIdentifierTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> quasi_identifiers;
  std::optional<std::string> sensitive_column;

  size_t column_index(const std::string& name) const;  // SchemaError if absent
};

// CSV with a header row; minimal RFC-style quoting ("" escapes a quote).
QuasiIdentifierTable read_csv_table(const std::filesystem::path& path);

// Table over manifest records: built-in columns sample_id, subject, path,
// label, modality, split plus every attribute key present in any record
// (missing attributes become "").
QuasiIdentifierTable table_from_manifest(const DatasetManifest& manifest);

struct EquivalenceClassViolation {
  std::vector<std::string> key;  // quasi-identifier tuple
  size_t count = 0;              // rows for k-anonymity, distinct values for l-diversity
};

struct AuditResult {
  bool pass = false;
  std::vector<EquivalenceClassViolation> violations;  // sorted by key
};

// Pass iff every distinct quasi-identifier tuple occurs in at least k rows.
AuditResult k_anonymity(const QuasiIdentifierTable& table, size_t k);

// Pass iff every equivalence class carries at least l distinct sensitive
// values. Requires sensitive_column.
AuditResult l_diversity(const QuasiIdentifierTable& table, size_t l);

// Named here so callers get a clear signal: no distance measure over
// sensitive values is defined in this codebase, so the check cannot be
// evaluated honestly. Always throws Error.
AuditResult t_closeness(const QuasiIdentifierTable& table, double threshold);

// Authenticated encryption for artifacts at rest (AES-256-GCM). Each seal
// draws a fresh random nonce, so equal payloads give distinct containers;
// unseal authenticates before releasing a single byte and throws
// AuthenticationError on any tampering or key mismatch.
std::vector<uint8_t> seal(std::span<const uint8_t> payload,
                          std::span<const uint8_t> key32);
std::vector<uint8_t> unseal(std::span<const uint8_t> container,
                            std::span<const uint8_t> key32);

enum class Action { read, write, export_data };
enum class ArtifactClass { manifests, checkpoints, reports };

std::string to_string(Action a);
std::string to_string(ArtifactClass c);
Action action_from_string(const std::string& s);
ArtifactClass artifact_class_from_string(const std::string& s);

// Deny-by-default role policy: role -> artifact class -> allowed actions.
struct RolePolicy {
  std::map<std::string, std::map<std::string, std::set<std::string>>> grants;

  static RolePolicy from_json_file(const std::filesystem::path& path);
  bool allows(const std::string& role, Action action, ArtifactClass artifact) const;
};

struct AccessLogEntry {
  std::string timestamp;
  std::string actor;
  std::string action;
  std::string artifact;
  std::string outcome;  // "allowed" | "denied"
  std::string prev_hash;
  std::string entry_hash;
};

// Append-only JSON Lines log; entries are chained by
// entry_hash = sha256(prev_hash + "\n" + canonical entry payload).
// Opening verifies the existing chain; appends are serialized.
class AccessLog {
 public:
  explicit AccessLog(std::filesystem::path path);

  AccessLogEntry append(const std::string& actor, Action action,
                        const std::string& artifact, bool allowed);

  static std::vector<AccessLogEntry> read(const std::filesystem::path& path);
  // IntegrityError if any entry was altered, removed from the interior, or
  // reordered.
  static void verify(const std::filesystem::path& path);

  static constexpr const char* kGenesisHash =
      "0000000000000000000000000000000000000000000000000000000000000000";

 private:
  std::filesystem::path path_;
  std::string last_hash_;
  std::mutex mutex_;
};

// Policy decision plus exactly one chained log entry per call.
bool authorize(const RolePolicy& policy, AccessLog& log, const std::string& actor,
               Action action, ArtifactClass artifact, const std::string& artifact_path);

struct AnonymizationFinding {
  size_t record_index = 0;
  std::string field;
  std::string name;
};

struct AnonymizationAudit {
  bool pass = false;
  std::vector<AnonymizationFinding> findings;
};

// Fails if any manifest field contains any original subject name as a
// case-insensitive substring. The caller supplies the original names; they
// never travel with the manifest.
AnonymizationAudit anonymization_audit(const DatasetManifest& manifest,
                                       const std::vector<std::string>& original_names);

}  // namespace asdscreen
