#pragma once

#include <filesystem>
#include <span>

#include "dre/corpus.hpp"
#include "dre/model.hpp"

namespace dre::stats {

enum class Projection { kNone, kLinear2d };

// Writes one CSV row per embedding with header id,role,stage,c0..c{k-1}.
// Stage "normal" covers the context and every response's full embedding;
// stage "disentangled" covers the responses' robust sub-embeddings.
// kLinear2d projects all rows onto the two top principal directions (a
// deterministic stand-in for the usual stochastic 2-D projections).
void export_embeddings(const training::SlmModel& model,
                       std::span<const corpus::DialogueExample> examples,
                       Projection projection,
                       const std::filesystem::path& out_csv);

}  // namespace dre::stats
