#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "cubemix/model.hpp"

namespace cubemix {

using Json = nlohmann::ordered_json;

// Model files: {"n", "k", "weights", "marginals" (row-major n x k), "subcube"}.
// Subcube entries are written as "0", "1/2", "1".
Json model_to_json(const ProductMixture& model, bool as_subcube_if_possible = true);
ProductMixture model_from_json(const Json& j);

void write_model_file(const std::string& path, const ProductMixture& model);
ProductMixture read_model_file(const std::string& path);

struct LabeledSample {
    Mask x = 0;
    int label = 0;
};

// One sample per line: n characters in {0,1}; character i is coordinate i.
std::string mask_to_bits(Mask x, int n);
Mask bits_to_mask(const std::string& bits);

void write_sample_file(const std::string& path, const std::vector<Mask>& samples, int n);
std::vector<Mask> read_sample_file(const std::string& path, int& n);

void write_labeled_file(const std::string& path, const std::vector<LabeledSample>& samples, int n);
std::vector<LabeledSample> read_labeled_file(const std::string& path, int& n);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cubemix
