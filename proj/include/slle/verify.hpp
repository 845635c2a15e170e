#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slle {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst observed error or the failing instance
};

/**
 * Self-check suite run by `slle verify`:
 *   gradient        M-step gradient against central differences of the objective
 *   sigma           spherical closed form against a golden-section search
 *   em_monotone     spherical EM trace non-decreasing on random data
 *   min_norm        E-step mean under Omega = I equals the minimum-norm solution
 *   lle_weights     classic weights sum to one
 *   ppca_sigma      closed-form sigma^2 is the mean discarded eigenvalue
 * Instances are drawn from Rng(seed).
 */
std::vector<CheckResult> run_verification_suite(std::uint64_t seed = 0);

}  // namespace slle
