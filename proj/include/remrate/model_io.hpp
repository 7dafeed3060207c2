#pragma once

#include <string>

#include "remrate/model.hpp"

namespace remrate::model {

// Loads { "cov_x": [[...]], "noise_var": [...] }; row-major finite doubles.
// Symmetry is enforced at relative tolerance 1e-12, then the matrix is
// symmetrized exactly as (M + M^T)/2.
SourceSpec load_model_file(const std::string& path);

SourceSpec load_model_json(const std::string& text);

}  // namespace remrate::model
