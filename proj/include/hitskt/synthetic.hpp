#pragma once

#include <cstdint>
#include <vector>

#include "hitskt/ingest.hpp"
#include "hitskt/rng.hpp"
#include "hitskt/segmentation.hpp"

namespace hitskt {

// Memorization fixture: the answer is a fixed function of the question
// (dense id parity), so a model with enough capacity can drive its training
// AUC toward 1.
Dataset synth_overfit(int64_t students, int64_t sessions, int64_t per_session,
                      int64_t skills, int64_t questions, uint64_t seed);

// Forgetting fixture: answers are Bernoulli with recall probability
// floor + span * xi(gap, s), where gap is the idle time since the previous
// session. Short and long gaps are mixed at random, so the only usable
// signal is how long ago the previous session happened.
Dataset synth_forgetting(int64_t students, int64_t sessions,
                         int64_t per_session, int64_t skills,
                         int64_t questions, double s, uint64_t seed);

// One student's raw, already-filtered time line. Idle gaps are drawn below,
// exactly at, just above and far above the session threshold.
std::vector<InteractionRecord> synth_random_records(Rng& rng,
                                                    int64_t student_idx);

// Directly assembled padded tensors (random real sessions, right-aligned
// interactions, increasing session starts) for model-level tests.
StudentTensors synth_random_tensors(Rng& rng, int64_t l_ses, int64_t l_int,
                                    int64_t questions, int64_t skills);

}  // namespace hitskt
