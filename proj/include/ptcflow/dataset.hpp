#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptcflow/features.hpp"

namespace ptcflow {

enum class Split : int { Train = 0, Test = 1, Validation = 2 };

// Raw (unnormalized) feature rows with their optimized pseudo-time-step
// targets and provenance.
struct Dataset {
    struct Provenance {
        std::string config_id;
        int iter = 0;
        int elem = 0;
    };

    std::vector<FeatureVector> features;
    std::vector<double> targets;  // dt_opt (s)
    std::vector<Provenance> provenance;
    std::vector<Split> split;  // empty until assign_splits

    std::size_t size() const { return features.size(); }
    std::vector<std::size_t> indices_of(Split s) const;
};

// Seeded shuffle, then 70/15/15 train/test/validation (integer truncation,
// remainder goes to validation).
void assign_splits(Dataset& ds, std::uint64_t seed);

// f000..f123,dt_opt,config_id,iter,elem
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

// row_index,split with split in {train,test,validation}
void save_splits_csv(const Dataset& ds, const std::string& path);
void load_splits_csv(Dataset& ds, const std::string& path);

}  // namespace ptcflow
