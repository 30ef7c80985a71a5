#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qw/normality_model.hpp"

namespace qw {

enum class Verdict { normal, anomalous };

inline constexpr double kDefaultZeta = 0.99;

/// Operator relabel of a window. `zeta` is set iff the verdict is anomalous.
struct FeedbackEvent {
  IndexRange window;
  Verdict verdict = Verdict::normal;
  std::optional<double> zeta;
  std::string note;
  std::string submitted_at;
  /// Model version the operator was looking at, if known.
  std::optional<std::uint64_t> base_version;

  void validate(int delta) const;
  friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

/// Which configuration set of the relabeled window the representatives are
/// correlated against when reducing normality.
enum class ReduceAgainst { filtered, raw };

/// Widens the normality parameters with a window labeled normal. Scaler and
/// quantizers stay frozen. Returns a copy with version + 1.
NormalityModel il_increase(const NormalityModel& model, const SensorFrame& frame, IndexRange window);

/// Forgets representatives correlated at >= zeta with a window labeled
/// anomalous, recomputes the boxes of the affected transitions from the
/// survivors and drops transitions left without representatives.
NormalityModel il_reduce(const NormalityModel& model, const SensorFrame& frame, IndexRange window,
                         double zeta, ReduceAgainst against = ReduceAgainst::filtered);

NormalityModel apply_feedback(const NormalityModel& model, const SensorFrame& frame,
                              const FeedbackEvent& event);

std::string to_string(Verdict verdict);
Verdict verdict_from_string(const std::string& text);

std::string event_to_json(const FeedbackEvent& event);
FeedbackEvent event_from_json(const std::string& text);

/// One line of the feedback journal.
struct JournalRecord {
  enum class Kind { feedback, rollback } kind = Kind::feedback;
  FeedbackEvent event;                  // feedback only
  std::uint64_t base_version = 0;       // version the update was applied to
  std::uint64_t resulting_version = 0;  // version active afterwards
};

std::vector<JournalRecord> read_journal(const std::string& path);
std::string journal_line(const JournalRecord& record);

struct VersionInfo {
  std::uint64_t version = 0;
  std::optional<std::uint64_t> parent;
  std::string description;
};

/// Versioned model store with an append-only journal and rollback snapshots.
/// Readers take a shared_ptr to an immutable model; updates are serialized
/// and swap the active pointer under the lock.
class ModelHistory {
 public:
  struct Options {
    std::string journal_path;  // empty: no journal
    std::string snapshot_dir;  // empty: snapshots kept in memory only
  };

  explicit ModelHistory(NormalityModel initial, Options options = {});

  std::shared_ptr<const NormalityModel> active() const;
  std::uint64_t active_version() const;
  std::vector<VersionInfo> versions() const;

  /// Applies the event to the active model. Throws ErrorCode::conflict if the
  /// event carries a base_version other than the active one.
  std::uint64_t apply(const SensorFrame& frame, const FeedbackEvent& event);
  std::uint64_t rollback(std::uint64_t version);

 private:
  void persist_snapshot(const NormalityModel& model) const;
  void append_journal(const JournalRecord& record) const;

  Options options_;
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const NormalityModel>> models_;
  std::vector<VersionInfo> history_;
  std::shared_ptr<const NormalityModel> active_;
  std::uint64_t max_version_ = 0;
};

/// Re-applies journal records to the model they started from.
NormalityModel replay_journal(const NormalityModel& initial, const SensorFrame& frame,
                              const std::vector<JournalRecord>& records);

}  // namespace qw
