#pragma once

#include <set>
#include <vector>

#include "crseval/model.hpp"

namespace crseval {

/// True iff every attention task was answered with the required rating;
/// vacuously true for studies without attention checks. Throws
/// MissingAttentionRating when an attention task carries no rating.
bool check_explicit_attention(const SessionRecord& record, const Study& study);

std::set<ImplicitFlag> compute_implicit_flags(const SessionRecord& record,
                                              const ImplicitThresholds& thresholds);

/// Fills in record.reliability for a single record: the explicit check
/// decides discarded, implicit flags are annotations only.
SessionRecord assess_record(SessionRecord record, const Study& study);
SessionRecord assess_record(SessionRecord record, const Study& study,
                            const ImplicitThresholds& thresholds);

struct Partition {
    std::vector<SessionRecord> kept;
    std::vector<SessionRecord> discarded;
};

/// Worker-level discard: one failed attention check discards every record of
/// that worker. Output records carry refreshed verdicts; relative input order
/// is preserved within each side.
Partition apply_discard_policy(std::vector<SessionRecord> records, const Study& study);

} // namespace crseval
