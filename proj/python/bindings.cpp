#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "matchsyn/baselines.hpp"
#include "matchsyn/checkpoint.hpp"
#include "matchsyn/cli.hpp"
#include "matchsyn/losses.hpp"
#include "matchsyn/optimizer.hpp"

namespace py = pybind11;
using namespace matchsyn;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("empty matrix");
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols) throw std::invalid_argument("ragged matrix");
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

}  // namespace

PYBIND11_MODULE(_matchsyn, m) {
    m.doc() = "Direct synthesis of transformer-based matching networks: "
              "analytic circuit surrogate, dataset generation, shared-encoder "
              "regression and the synthesis workflow.";

    py::class_<EnvConfig>(m, "EnvConfig")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("freq"), py::arg("r_load"))
        .def_readwrite("freq", &EnvConfig::freq)
        .def_readwrite("r_load", &EnvConfig::r_load);

    py::class_<Geometry>(m, "Geometry")
        .def(py::init<>())
        .def(py::init<double, double, double, double, double, double>(),
             py::arg("w_oa"), py::arg("w_ob"), py::arg("r0"), py::arg("r1"),
             py::arg("x_gnd"), py::arg("l_f"))
        .def_readwrite("w_oa", &Geometry::w_oa)
        .def_readwrite("w_ob", &Geometry::w_ob)
        .def_readwrite("r0", &Geometry::r0)
        .def_readwrite("r1", &Geometry::r1)
        .def_readwrite("x_gnd", &Geometry::x_gnd)
        .def_readwrite("l_f", &Geometry::l_f)
        .def("__repr__", [](const Geometry& g) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "Geometry(w_oa=%.4g, w_ob=%.4g, r0=%.4g, r1=%.4g, "
                          "x_gnd=%.4g, l_f=%.4g)",
                          g.w_oa, g.w_ob, g.r0, g.r1, g.x_gnd, g.l_f);
            return std::string(buf);
        });

    py::class_<CircuitParams>(m, "CircuitParams")
        .def(py::init<>())
        .def_readwrite("l1", &CircuitParams::l1)
        .def_readwrite("l2", &CircuitParams::l2)
        .def_readwrite("k", &CircuitParams::k)
        .def_readwrite("q1", &CircuitParams::q1)
        .def_readwrite("q2", &CircuitParams::q2)
        .def_readwrite("cp", &CircuitParams::cp);

    py::class_<Performance>(m, "Performance")
        .def(py::init<>())
        .def(py::init<double, double, double, double>(), py::arg("re_z"),
             py::arg("im_z"), py::arg("c1"), py::arg("c2"))
        .def_readwrite("re_z", &Performance::re_z)
        .def_readwrite("im_z", &Performance::im_z)
        .def_readwrite("c1", &Performance::c1)
        .def_readwrite("c2", &Performance::c2);

    m.def("loop_inductance", &loop_inductance, py::arg("radius_um"),
          py::arg("width_um"), py::arg("feed_len_um"));
    m.def("geometry_to_circuit", &geometry_to_circuit, py::arg("g"),
          py::arg("env") = EnvConfig{});
    m.def("input_impedance", &input_impedance, py::arg("c"), py::arg("c1_ff"),
          py::arg("c2_ff"), py::arg("env") = EnvConfig{});
    m.def("performance_from_geometry", &performance_from_geometry, py::arg("g"),
          py::arg("c1_ff"), py::arg("c2_ff"), py::arg("env") = EnvConfig{});

    py::class_<Interval>(m, "Interval")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("lo"), py::arg("hi"))
        .def_readwrite("lo", &Interval::lo)
        .def_readwrite("hi", &Interval::hi);

    py::class_<SamplingRanges>(m, "SamplingRanges")
        .def(py::init<>())
        .def_readwrite("w_oa", &SamplingRanges::w_oa)
        .def_readwrite("w_ob", &SamplingRanges::w_ob)
        .def_readwrite("r0", &SamplingRanges::r0)
        .def_readwrite("r1", &SamplingRanges::r1)
        .def_readwrite("x_gnd", &SamplingRanges::x_gnd)
        .def_readwrite("l_f", &SamplingRanges::l_f)
        .def_readwrite("c1", &SamplingRanges::c1)
        .def_readwrite("c2", &SamplingRanges::c2);

    py::class_<NormStats>(m, "NormStats")
        .def(py::init<>())
        .def_readwrite("mean", &NormStats::mean)
        .def_readwrite("stdev", &NormStats::stdev);

    py::class_<Triple>(m, "Triple")
        .def_readwrite("x", &Triple::x)
        .def_readwrite("z", &Triple::z)
        .def_readwrite("y", &Triple::y);

    py::enum_<Split>(m, "Split").value("train", Split::train).value("test", Split::test);

    py::class_<SplitInfo>(m, "SplitInfo")
        .def_readwrite("fraction", &SplitInfo::fraction)
        .def_readwrite("seed", &SplitInfo::seed);

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("rows", &Dataset::rows)
        .def_readonly("seed", &Dataset::seed)
        .def_readonly("split_info", &Dataset::split_info)
        .def_readonly("split_tag", &Dataset::split_tag)
        .def_readonly("norm_stats", &Dataset::norm_stats)
        .def("train_indices", &Dataset::train_indices)
        .def("test_indices", &Dataset::test_indices)
        .def("__len__", [](const Dataset& d) { return d.rows.size(); });

    m.def("sample_geometry", &sample_geometry, py::arg("index"), py::arg("master_seed"),
          py::arg("ranges") = SamplingRanges{});
    m.def("generate", &generate, py::arg("n"), py::arg("master_seed"),
          py::arg("ranges") = SamplingRanges{}, py::arg("env") = EnvConfig{});
    m.def("split", &split, py::arg("dataset"), py::arg("train_fraction"),
          py::arg("seed"));
    m.def("normalize_input", &normalize_input, py::arg("x"), py::arg("stats"));
    m.def("denormalize_input", &denormalize_input, py::arg("v"), py::arg("stats"));
    m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("csv_path"));
    m.def("load_csv", &load_csv, py::arg("csv_path"));

    py::enum_<LossKind>(m, "LossKind")
        .value("smse", LossKind::smse)
        .value("sdmse", LossKind::sdmse);

    m.def("smse", [](const std::vector<std::vector<double>>& pred,
                     const std::vector<std::vector<double>>& target) {
        return smse(to_matrix(pred), to_matrix(target));
    });
    m.def("sdmse", [](const std::vector<std::vector<double>>& pred,
                      const std::vector<std::vector<double>>& target) {
        return sdmse(to_matrix(pred), to_matrix(target));
    });
    m.def("r_squared", [](const std::vector<std::vector<double>>& pred,
                          const std::vector<std::vector<double>>& target) {
        return r_squared(to_matrix(pred), to_matrix(target));
    });

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_static("desk", &ModelConfig::desk)
        .def_static("paper", &ModelConfig::paper)
        .def_readwrite("input_dim", &ModelConfig::input_dim)
        .def_readwrite("output_dim", &ModelConfig::output_dim)
        .def_readwrite("encoder", &ModelConfig::encoder)
        .def_readwrite("circuit_hidden", &ModelConfig::circuit_hidden)
        .def_readwrite("physical_hidden", &ModelConfig::physical_hidden);

    py::class_<AdamParams>(m, "AdamParams")
        .def(py::init<>())
        .def_readwrite("beta1", &AdamParams::beta1)
        .def_readwrite("beta2", &AdamParams::beta2)
        .def_readwrite("eps", &AdamParams::eps)
        .def_readwrite("tau", &AdamParams::tau);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_static("desk", &TrainConfig::desk)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("lr0", &TrainConfig::lr0)
        .def_readwrite("decay_every", &TrainConfig::decay_every)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("loss_kind", &TrainConfig::loss_kind)
        .def_readwrite("init_seed", &TrainConfig::init_seed)
        .def_readwrite("shuffle_seed", &TrainConfig::shuffle_seed)
        .def_readwrite("adam", &TrainConfig::adam)
        .def_readwrite("verbose", &TrainConfig::verbose);

    py::class_<SENNModel>(m, "SENNModel")
        .def("predict_geometry",
             [](const SENNModel& model, const Performance& x) {
                 return predict_geometry(model, x);
             })
        .def("parameter_count", &SENNModel::parameter_count)
        .def_readonly("input_stats", &SENNModel::input_stats)
        .def_readonly("init_seed", &SENNModel::init_seed)
        .def_readonly("train_seed", &SENNModel::train_seed);

    py::class_<EpochLog>(m, "EpochLog")
        .def_readonly("epoch", &EpochLog::epoch)
        .def_readonly("eta", &EpochLog::eta)
        .def_readonly("train_loss", &EpochLog::train_loss)
        .def_readonly("test_smse", &EpochLog::test_smse)
        .def_readonly("test_sdmse", &EpochLog::test_sdmse)
        .def_readonly("test_r2", &EpochLog::test_r2);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("model", &TrainResult::model)
        .def_readonly("log", &TrainResult::log);

    py::class_<EvalMetrics>(m, "EvalMetrics")
        .def_readonly("smse", &EvalMetrics::smse)
        .def_readonly("sdmse", &EvalMetrics::sdmse)
        .def_readonly("r2", &EvalMetrics::r2);

    m.def("init_model", &init_model, py::arg("config"), py::arg("seed"));
    m.def("lr_schedule", &lr_schedule, py::arg("epoch"), py::arg("lr0"),
          py::arg("decay_every") = 50);
    m.def("train", &train, py::arg("dataset"), py::arg("model_config"),
          py::arg("train_config"));
    m.def("train_naive", &train_naive, py::arg("dataset"), py::arg("model_config"),
          py::arg("train_config"));
    m.def("evaluate_model", &evaluate_model, py::arg("model"), py::arg("dataset"));

    py::class_<LinearModel>(m, "LinearModel")
        .def("predict_geometry",
             [](const LinearModel& lm, const Performance& x) {
                 return linear_predict_geometry(lm, x);
             })
        .def_readonly("input_stats", &LinearModel::input_stats);

    m.def("fit_linear", &fit_linear, py::arg("dataset"));
    m.def("evaluate_linear", &evaluate_linear, py::arg("model"), py::arg("dataset"));

    m.def(
        "save_checkpoint",
        [](const std::string& path, const SENNModel& model, const std::string& kind) {
            save_checkpoint(path, model, kind);
        },
        py::arg("path"), py::arg("model"), py::arg("kind") = "senn");
    m.def(
        "save_checkpoint_linear",
        [](const std::string& path, const LinearModel& model) {
            save_checkpoint(path, model);
        },
        py::arg("path"), py::arg("model"));

    py::class_<LoadedModel>(m, "LoadedModel")
        .def_readonly("kind", &LoadedModel::kind)
        .def_readonly("senn", &LoadedModel::senn)
        .def_readonly("linear", &LoadedModel::linear)
        .def("is_linear", &LoadedModel::is_linear)
        .def("predict", &LoadedModel::predict, py::arg("x"));

    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    py::class_<SynthesisResult>(m, "SynthesisResult")
        .def_readonly("geometry", &SynthesisResult::geometry)
        .def_readonly("target", &SynthesisResult::target)
        .def_readonly("achieved", &SynthesisResult::achieved)
        .def_readonly("z_scores", &SynthesisResult::z_scores)
        .def_readonly("out_of_distribution", &SynthesisResult::out_of_distribution)
        .def_readonly("geometry_valid", &SynthesisResult::geometry_valid)
        .def_readonly("verified", &SynthesisResult::verified);

    m.def("synthesize_target", &synthesize_target, py::arg("model"), py::arg("target"),
          py::arg("env") = EnvConfig{});

    m.def(
        "cli_run",
        [](const std::vector<std::string>& args) { return cli::run(args); },
        py::arg("args"), "Run the command-line interface in-process");

    m.def("set_max_threads", &set_max_threads, py::arg("n"));
}
