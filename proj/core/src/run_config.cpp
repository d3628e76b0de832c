#include "oled/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace oled {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_float(float v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': bad integer '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty channel list");
    return out;
}

template <typename T, typename Parse>
T parse_or_throw(const std::string& key, const std::string& value, Parse parse) {
    try {
        return parse(value);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad value '" + value + "'");
    }
}

} // namespace

void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto as_int = [&] {
        return parse_or_throw<int>(key, value, [](const std::string& v) { return std::stoi(v); });
    };
    auto as_double = [&] {
        return parse_or_throw<double>(key, value, [](const std::string& v) { return std::stod(v); });
    };
    auto as_float = [&] {
        return parse_or_throw<float>(key, value, [](const std::string& v) { return std::stof(v); });
    };
    auto as_u64 = [&] {
        return parse_or_throw<std::uint64_t>(key, value,
                                             [](const std::string& v) { return std::stoull(v); });
    };

    if (key == "protocol") {
        if (value != "mnist" && value != "cifar" && value != "ucsd")
            throw ConfigError("protocol must be mnist, cifar or ucsd");
        cfg.protocol = value;
    } else if (key == "mnist_images") {
        cfg.mnist_images = value;
    } else if (key == "mnist_labels") {
        cfg.mnist_labels = value;
    } else if (key == "cifar_dir") {
        cfg.cifar_dir = value;
    } else if (key == "ucsd_dir") {
        cfg.ucsd_dir = value;
    } else if (key == "inlier_class") {
        cfg.inlier_class = as_int();
    } else if (key == "patch_size") {
        cfg.patch_size = as_int();
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "t") {
        cfg.train.keep_fraction = as_double();
    } else if (key == "gamma") {
        cfg.train.gamma = as_double();
    } else if (key == "lambda") {
        cfg.train.lambda = as_double();
    } else if (key == "lr") {
        cfg.train.adam.lr = as_float();
    } else if (key == "b1") {
        cfg.train.adam.b1 = as_float();
    } else if (key == "b2") {
        cfg.train.adam.b2 = as_float();
    } else if (key == "adam_eps") {
        cfg.train.adam.eps = as_float();
    } else if (key == "batch") {
        cfg.train.batch = as_int();
    } else if (key == "epochs") {
        cfg.train.epochs = as_int();
    } else if (key == "seed") {
        cfg.train.seed = as_u64();
    } else if (key == "grad_mode") {
        if (value == "straight-through")
            cfg.train.grad_mode = MaskGradMode::StraightThrough;
        else if (value == "paper-literal")
            cfg.train.grad_mode = MaskGradMode::PaperLiteral;
        else
            throw ConfigError("grad_mode must be straight-through or paper-literal");
    } else if (key == "val_fraction") {
        cfg.train.val_fraction = as_double();
    } else if (key == "mask_eps") {
        cfg.train.mask_eps = as_float();
    } else if (key == "bottleneck") {
        cfg.train.bottleneck = as_int();
    } else if (key == "r_enc") {
        cfg.train.r_enc = parse_int_list(key, value);
    } else if (key == "r_dec") {
        cfg.train.r_dec = parse_int_list(key, value);
    } else if (key == "m_enc") {
        cfg.train.m_enc = parse_int_list(key, value);
    } else if (key == "m_dec") {
        cfg.train.m_dec = parse_int_list(key, value);
    } else if (key == "leaky_slope") {
        cfg.train.leaky_slope = as_float();
    } else if (key == "bn_eps") {
        cfg.train.bn_eps = as_float();
    } else if (key == "bn_momentum") {
        cfg.train.bn_momentum = as_float();
    } else if (key == "cae_crop") {
        cfg.train.cae_crop = as_int();
    } else if (key == "eval_batch") {
        cfg.train.eval_batch = as_int();
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        set_run_config_value(cfg, key, value);
    }
    return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "protocol = " << cfg.protocol << "\n";
    out << "mnist_images = " << cfg.mnist_images << "\n";
    out << "mnist_labels = " << cfg.mnist_labels << "\n";
    out << "cifar_dir = " << cfg.cifar_dir << "\n";
    out << "ucsd_dir = " << cfg.ucsd_dir << "\n";
    out << "inlier_class = " << cfg.inlier_class << "\n";
    out << "patch_size = " << cfg.patch_size << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    const TrainConfig& t = cfg.train;
    out << "t = " << fmt_double(t.keep_fraction) << "\n";
    out << "gamma = " << fmt_double(t.gamma) << "\n";
    out << "lambda = " << fmt_double(t.lambda) << "\n";
    out << "lr = " << fmt_float(t.adam.lr) << "\n";
    out << "b1 = " << fmt_float(t.adam.b1) << "\n";
    out << "b2 = " << fmt_float(t.adam.b2) << "\n";
    out << "adam_eps = " << fmt_float(t.adam.eps) << "\n";
    out << "batch = " << t.batch << "\n";
    out << "epochs = " << t.epochs << "\n";
    out << "seed = " << t.seed << "\n";
    out << "grad_mode = "
        << (t.grad_mode == MaskGradMode::PaperLiteral ? "paper-literal" : "straight-through")
        << "\n";
    out << "val_fraction = " << fmt_double(t.val_fraction) << "\n";
    out << "mask_eps = " << fmt_float(t.mask_eps) << "\n";
    out << "bottleneck = " << t.bottleneck << "\n";
    out << "r_enc = " << join_ints(t.r_enc) << "\n";
    out << "r_dec = " << join_ints(t.r_dec) << "\n";
    out << "m_enc = " << join_ints(t.m_enc) << "\n";
    out << "m_dec = " << join_ints(t.m_dec) << "\n";
    out << "leaky_slope = " << fmt_float(t.leaky_slope) << "\n";
    out << "bn_eps = " << fmt_float(t.bn_eps) << "\n";
    out << "bn_momentum = " << fmt_float(t.bn_momentum) << "\n";
    out << "cae_crop = " << t.cae_crop << "\n";
    out << "eval_batch = " << t.eval_batch << "\n";
    return out.str();
}

void write_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << serialize_run_config(cfg);
}

DatasetSplit build_split_from_config(const RunConfig& cfg) {
    if (cfg.protocol == "mnist") {
        if (cfg.mnist_images.empty() || cfg.mnist_labels.empty())
            throw ConfigError("mnist protocol needs mnist_images and mnist_labels paths");
        const RawDataset raw = load_mnist(cfg.mnist_images, cfg.mnist_labels);
        return build_mnist_protocol(raw, cfg.inlier_class, cfg.train.seed,
                                    cfg.train.val_fraction);
    }
    if (cfg.protocol == "cifar") {
        if (cfg.cifar_dir.empty()) throw ConfigError("cifar protocol needs cifar_dir");
        return build_cifar_protocol(load_cifar_train(cfg.cifar_dir), load_cifar_test(cfg.cifar_dir),
                                    cfg.inlier_class, cfg.train.seed, cfg.train.val_fraction);
    }
    if (cfg.protocol == "ucsd") {
        if (cfg.ucsd_dir.empty()) throw ConfigError("ucsd protocol needs ucsd_dir");
        return build_ucsd_protocol(cfg.ucsd_dir, cfg.train.seed, cfg.train.val_fraction,
                                   cfg.patch_size);
    }
    throw ConfigError("unknown protocol '" + cfg.protocol + "'");
}

} // namespace oled
