#include "cubemix/io.hpp"

#include <fstream>
#include <sstream>

namespace cubemix {

Json model_to_json(const ProductMixture& model, bool as_subcube_if_possible) {
    Json j;
    j["n"] = model.n;
    j["k"] = model.k;
    j["weights"] = model.weights;
    SubcubeMixture sc;
    bool subcube = as_subcube_if_possible && as_subcube(model, sc);
    j["subcube"] = subcube;
    Json m = Json::array();
    for (double v : model.marginals) {
        if (subcube) m.push_back(v == 0.0 ? "0" : v == 1.0 ? "1" : "1/2");
        else m.push_back(v);
    }
    j["marginals"] = m;
    return j;
}

ProductMixture model_from_json(const Json& j) {
    ProductMixture p;
    try {
        p.n = j.at("n").get<int>();
        p.k = j.at("k").get<int>();
        p.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& e : j.at("marginals")) {
            if (e.is_string()) {
                std::string s = e.get<std::string>();
                if (s == "0") p.marginals.push_back(0.0);
                else if (s == "1/2") p.marginals.push_back(0.5);
                else if (s == "1") p.marginals.push_back(1.0);
                else throw Error("model file: bad subcube entry '" + s + "'");
            } else {
                p.marginals.push_back(e.get<double>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("model file: ") + e.what());
    }
    p.validate();
    return p;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

void write_model_file(const std::string& path, const ProductMixture& model) {
    write_text_file(path, model_to_json(model).dump(2) + "\n");
}

ProductMixture read_model_file(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("model file " + path + ": " + e.what());
    }
    return model_from_json(j);
}

std::string mask_to_bits(Mask x, int n) {
    std::string s(n, '0');
    for (int i = 0; i < n; ++i)
        if (test_bit(x, i)) s[i] = '1';
    return s;
}

Mask bits_to_mask(const std::string& bits) {
    if (static_cast<int>(bits.size()) > kMaxDim) throw Error("sample longer than the supported dimension");
    Mask x = 0;
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') x |= Mask{1} << i;
        else if (bits[i] != '0') throw Error("sample line contains a character other than 0/1");
    }
    return x;
}

void write_sample_file(const std::string& path, const std::vector<Mask>& samples, int n) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (Mask x : samples) out << mask_to_bits(x, n) << '\n';
}

namespace {

template <class F>
void for_each_line(const std::string& path, F&& f) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        f(line);
    }
}

}  // namespace

std::vector<Mask> read_sample_file(const std::string& path, int& n) {
    std::vector<Mask> out;
    n = -1;
    for_each_line(path, [&](const std::string& line) {
        std::string bits = line.substr(0, line.find('\t'));
        if (n < 0) n = static_cast<int>(bits.size());
        if (static_cast<int>(bits.size()) != n) throw Error("sample file: inconsistent line lengths");
        out.push_back(bits_to_mask(bits));
    });
    if (out.empty()) throw Error("sample file " + path + " is empty");
    return out;
}

void write_labeled_file(const std::string& path, const std::vector<LabeledSample>& samples, int n) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (const auto& s : samples) out << mask_to_bits(s.x, n) << '\t' << s.label << '\n';
}

std::vector<LabeledSample> read_labeled_file(const std::string& path, int& n) {
    std::vector<LabeledSample> out;
    n = -1;
    for_each_line(path, [&](const std::string& line) {
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("labeled sample file: missing label column");
        std::string bits = line.substr(0, tab), lab = line.substr(tab + 1);
        if (n < 0) n = static_cast<int>(bits.size());
        if (static_cast<int>(bits.size()) != n) throw Error("labeled sample file: inconsistent line lengths");
        if (lab != "0" && lab != "1") throw Error("labeled sample file: label must be 0 or 1");
        out.push_back({bits_to_mask(bits), lab == "1" ? 1 : 0});
    });
    if (out.empty()) throw Error("labeled sample file " + path + " is empty");
    return out;
}

}  // namespace cubemix
