#include "ptcflow/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ptcflow/rng.hpp"

namespace ptcflow {

std::vector<std::size_t> Dataset::indices_of(Split s) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) idx.push_back(i);
    return idx;
}

void assign_splits(Dataset& ds, std::uint64_t seed) {
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    const std::size_t n_train = n * 70 / 100;
    const std::size_t n_test = n * 15 / 100;
    ds.split.assign(n, Split::Validation);
    for (std::size_t k = 0; k < n; ++k) {
        if (k < n_train)
            ds.split[order[k]] = Split::Train;
        else if (k < n_train + n_test)
            ds.split[order[k]] = Split::Test;
    }
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_dataset_csv: cannot open " + path);
    for (int i = 0; i < kFeatureCount; ++i) {
        char name[8];
        std::snprintf(name, sizeof name, "f%03d", i);
        f << name << ",";
    }
    f << "dt_opt,config_id,iter,elem\n";
    char buf[32];
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (int i = 0; i < kFeatureCount; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.features[r][i]);
            f << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", ds.targets[r]);
        f << buf << "," << ds.provenance[r].config_id << "," << ds.provenance[r].iter << ","
          << ds.provenance[r].elem << "\n";
    }
    if (!f) throw std::runtime_error("save_dataset_csv: write failed for " + path);
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_dataset_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("load_dataset_csv: empty file " + path);
    Dataset ds;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        FeatureVector fv{};
        for (int i = 0; i < kFeatureCount; ++i) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("load_dataset_csv: short row");
            fv[i] = std::stod(cell);
        }
        if (!std::getline(ss, cell, ',')) throw std::runtime_error("load_dataset_csv: short row");
        ds.targets.push_back(std::stod(cell));
        Dataset::Provenance prov;
        if (!std::getline(ss, prov.config_id, ','))
            throw std::runtime_error("load_dataset_csv: short row");
        if (!std::getline(ss, cell, ',')) throw std::runtime_error("load_dataset_csv: short row");
        prov.iter = std::stoi(cell);
        if (!std::getline(ss, cell, ',')) throw std::runtime_error("load_dataset_csv: short row");
        prov.elem = std::stoi(cell);
        ds.features.push_back(fv);
        ds.provenance.push_back(prov);
    }
    return ds;
}

void save_splits_csv(const Dataset& ds, const std::string& path) {
    if (ds.split.size() != ds.size())
        throw std::invalid_argument("save_splits_csv: splits not assigned");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_splits_csv: cannot open " + path);
    f << "row_index,split\n";
    static const char* names[] = {"train", "test", "validation"};
    for (std::size_t i = 0; i < ds.split.size(); ++i)
        f << i << "," << names[static_cast<int>(ds.split[i])] << "\n";
}

void load_splits_csv(Dataset& ds, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_splits_csv: cannot open " + path);
    std::string line;
    std::getline(f, line);
    ds.split.assign(ds.size(), Split::Validation);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string idx, name;
        std::getline(ss, idx, ',');
        std::getline(ss, name, ',');
        const std::size_t i = std::stoul(idx);
        if (i >= ds.size()) throw std::runtime_error("load_splits_csv: row index out of range");
        if (name == "train")
            ds.split[i] = Split::Train;
        else if (name == "test")
            ds.split[i] = Split::Test;
        else if (name == "validation")
            ds.split[i] = Split::Validation;
        else
            throw std::runtime_error("load_splits_csv: unknown split " + name);
    }
}

}  // namespace ptcflow
