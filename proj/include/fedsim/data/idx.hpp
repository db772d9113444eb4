#pragma once

#include <string>

#include "fedsim/data/dataset.hpp"

namespace fedsim::data {

// IDX format (big-endian): images carry magic 0x00000803 then count, rows,
// cols as unsigned 32-bit followed by unsigned pixel bytes; labels carry
// magic 0x00000801 then count followed by label bytes. Pixels are scaled
// to [0,1] by division by 255 and images flattened row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes a Dataset back to an IDX pair; features are quantized with
// round(v*255), so byte-valued datasets round-trip exactly. A dataset whose
// feature_dim came from rows x cols is written as (feature_dim, 1).
void write_idx(const Dataset& dataset, const std::string& images_path,
               const std::string& labels_path);

// Binary cache for synthetic datasets: "FSDC" magic, version, counts as
// little-endian u32, labels as u32, features as little-endian 64-bit floats
// (the checkpoint float format).
void save_dataset_cache(const Dataset& dataset, const std::string& path);
Dataset load_dataset_cache(const std::string& path);

}  // namespace fedsim::data
