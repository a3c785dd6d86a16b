#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>
#include <sstream>

#include "ssdal/commands.hpp"
#include "ssdal/error.hpp"
#include "ssdal/gradcheck.hpp"
#include "ssdal/pipeline.hpp"
#include "ssdal/reid_eval.hpp"
#include "ssdal/triplet.hpp"

namespace py = pybind11;
using namespace ssdal;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IdArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const RealArray& a) {
  require(a.ndim() == 2, ErrorKind::shape, "expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

std::vector<double> to_vector(const RealArray& a) {
  require(a.ndim() == 1, ErrorKind::shape, "expected a 1-D array");
  return {a.data(), a.data() + a.shape(0)};
}

std::vector<std::int64_t> to_ids(const IdArray& a) {
  require(a.ndim() == 1, ErrorKind::shape, "expected a 1-D id array");
  return {a.data(), a.data() + a.shape(0)};
}

RealArray from_matrix(const Matrix& m) {
  RealArray out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

RealArray from_vector(const std::vector<double>& v) {
  RealArray out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> from_bits(const AttributeVector& v) {
  py::array_t<std::uint8_t> out(v.size());
  std::copy(v.bits().begin(), v.bits().end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> from_bit_rows(const std::vector<AttributeVector>& rows, std::size_t k) {
  py::array_t<std::uint8_t> out({rows.size(), k});
  auto* dst = out.mutable_data();
  for (const auto& r : rows) dst = std::copy(r.bits().begin(), r.bits().end(), dst);
  return out;
}

AttributeVector to_bits(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  require(a.ndim() == 1, ErrorKind::shape, "expected a 1-D 0/1 array");
  return AttributeVector(std::vector<std::uint8_t>(a.data(), a.data() + a.shape(0)));
}

// Python side turns these back into objects with json.loads.
std::string dumped(const Json& j) { return j.dump(); }

RunConfig to_config(const std::map<std::string, std::string>& values) {
  RunConfig config;
  for (const auto& [key, value] : values) config.set(key, value);
  return config;
}

IdSet to_id_set(const RealArray& features, const IdArray& person_ids, const IdArray& camera_ids) {
  IdSet set{to_matrix(features), to_ids(person_ids), to_ids(camera_ids)};
  set.validate();
  return set;
}

py::tuple triplet_tuple(const TripletLoss& loss) {
  return py::make_tuple(loss.loss, from_vector(loss.grad_anchor),
                        from_vector(loss.grad_positive), from_vector(loss.grad_negative));
}

}  // namespace

PYBIND11_MODULE(_ssdal, m) {
  m.doc() = "C++ core of the ssdal package";

  // Leaked on purpose: the type must outlive interpreter teardown.
  static auto* error_type = new py::object(py::exception<Error>(m, "SsdalError"));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = (*error_type)(e.what());
      exc.attr("kind") = to_string(e.kind());
      exc.attr("exit_code") = exit_code(e.kind());
      PyErr_SetObject(error_type->ptr(), exc.ptr());
    }
  });

  py::class_<NetworkParams>(m, "Network")
      .def_property_readonly("input_dim", &NetworkParams::input_dim)
      .def_property_readonly("output_dim", &NetworkParams::output_dim)
      .def_property_readonly("layer_count", [](const NetworkParams& n) { return n.layers.size(); })
      .def_property_readonly("parameter_count", &NetworkParams::parameter_count)
      .def("weight", [](const NetworkParams& n, std::size_t l) { return from_matrix(n.layers.at(l).weight); })
      .def("bias", [](const NetworkParams& n, std::size_t l) { return from_vector(n.layers.at(l).bias); })
      .def("checkpoint", [](const NetworkParams& n) {
        std::ostringstream out;
        save_checkpoint(n, out);
        return out.str();
      })
      .def("digest", &checkpoint_digest)
      .def("__eq__", [](const NetworkParams& a, const NetworkParams& b) { return a == b; });

  m.def("init_network",
        [](std::vector<std::size_t> sizes, const std::string& activation, std::uint64_t seed) {
          return init_network({std::move(sizes), parse_activation(activation), seed});
        },
        py::arg("layer_sizes"), py::arg("activation") = "tanh", py::arg("seed") = 0);
  m.def("load_checkpoint", py::overload_cast<const std::string&>(&load_checkpoint), py::arg("path"));
  m.def("save_checkpoint",
        py::overload_cast<const NetworkParams&, const std::string&>(&save_checkpoint),
        py::arg("network"), py::arg("path"));
  m.def("parse_checkpoint", [](const std::string& text) {
    std::istringstream in(text);
    return load_checkpoint(in);
  });

  m.def("forward", [](const NetworkParams& n, const RealArray& x) {
    const auto trace = forward(n, to_matrix(x));
    py::dict out;
    out["logits"] = from_matrix(trace.logits());
    out["scores"] = from_matrix(trace.scores());
    if (n.layers.size() >= 2) out["penultimate"] = from_matrix(trace.penultimate());
    return out;
  });
  m.def("sigmoid_cross_entropy", [](const RealArray& logits, const RealArray& targets) {
    const auto ce = sigmoid_cross_entropy(to_matrix(logits), to_matrix(targets));
    return py::make_tuple(ce.loss, from_matrix(ce.gradient));
  });

  m.def("binarize_top_p", [](const RealArray& s, std::size_t p) {
    return from_bits(binarize_top_p(to_vector(s), p));
  });
  m.def("binarize_threshold", [](const RealArray& s, double tau) {
    return from_bits(binarize_threshold(to_vector(s), tau));
  });
  m.def("predict_initial_labels", [](const NetworkParams& n, const RealArray& x, std::size_t p) {
    return from_bit_rows(predict_initial_labels(n, to_matrix(x), p).labels, n.output_dim());
  });
  m.def("predict_deep_attributes", [](const NetworkParams& n, const RealArray& x, double tau) {
    return from_bit_rows(predict_deep_attributes(n, to_matrix(x), tau), n.output_dim());
  }, py::arg("network"), py::arg("features"), py::arg("tau") = 0.0);
  m.def("attribute_accuracy", [](const RealArray& s, const py::array_t<std::uint8_t>& truth) {
    return attribute_accuracy(to_vector(s), to_bits(truth));
  });

  m.def("hinge_triplet_loss",
        [](const RealArray& a, const RealArray& p, const RealArray& n, double theta) {
          return triplet_tuple(hinge_triplet_loss(to_vector(a), to_vector(p), to_vector(n),
                                                  {theta, 0.0}));
        },
        py::arg("anchor"), py::arg("positive"), py::arg("negative"), py::arg("theta") = 1.0);
  m.def("attributes_triplet_loss",
        [](const RealArray& a, const RealArray& p, const RealArray& n,
           const py::array_t<std::uint8_t>& ta, const py::array_t<std::uint8_t>& tp,
           const py::array_t<std::uint8_t>& tn, double theta, double gamma) {
          return triplet_tuple(attributes_triplet_loss(to_vector(a), to_vector(p), to_vector(n),
                                                       to_bits(ta), to_bits(tp), to_bits(tn),
                                                       {theta, gamma}));
        },
        py::arg("anchor"), py::arg("positive"), py::arg("negative"), py::arg("anchor_initial"),
        py::arg("positive_initial"), py::arg("negative_initial"), py::arg("theta") = 1.0,
        py::arg("gamma") = 0.01);

  m.def("rank_gallery", [](const RealArray& probe, const RealArray& gallery,
                           const std::string& distance) {
    return rank_gallery(to_vector(probe), to_matrix(gallery), parse_distance(distance));
  }, py::arg("probe"), py::arg("gallery"), py::arg("distance") = "cosine");
  m.def("cmc", [](const std::vector<Ranking>& rankings, const IdArray& probe_ids,
                  const IdArray& gallery_ids) {
    return cmc(rankings, to_ids(probe_ids), to_ids(gallery_ids)).scores;
  });
  m.def("averaged_cmc",
        [](const RealArray& probe, const IdArray& probe_ids, const RealArray& gallery,
           const IdArray& gallery_ids, std::size_t num_tests, std::size_t probe_size,
           std::uint64_t seed, const std::string& distance) {
          ProbeGallery data;
          const auto pids = to_ids(probe_ids);
          const auto gids = to_ids(gallery_ids);
          data.probe = {to_matrix(probe), pids, std::vector<std::int64_t>(pids.size(), 0)};
          data.gallery = {to_matrix(gallery), gids, std::vector<std::int64_t>(gids.size(), 1)};
          SplitProtocol protocol{num_tests, probe_size, seed, parse_distance(distance)};
          return averaged_cmc(data, protocol).scores;
        },
        py::arg("probe"), py::arg("probe_ids"), py::arg("gallery"), py::arg("gallery_ids"),
        py::arg("num_tests") = 10, py::arg("probe_size") = 0, py::arg("seed") = 0,
        py::arg("distance") = "cosine");
  m.def("mean_average_precision",
        [](const std::vector<Ranking>& rankings,
           const std::vector<std::set<std::size_t>>& relevant) {
          return mean_average_precision(rankings, relevant).map_percent;
        });
  m.def("evaluate_retrieval",
        [](const RealArray& qf, const IdArray& qp, const IdArray& qc, const RealArray& gf,
           const IdArray& gp, const IdArray& gc, const std::string& mode,
           const std::string& distance, bool exclude_same_camera) {
          const auto r = evaluate_retrieval(to_id_set(qf, qp, qc), to_id_set(gf, gp, gc),
                                            parse_query_mode(mode),
                                            {parse_distance(distance), exclude_same_camera});
          return py::make_tuple(r.map_percent, r.rank1_percent);
        },
        py::arg("query_features"), py::arg("query_ids"), py::arg("query_cameras"),
        py::arg("gallery_features"), py::arg("gallery_ids"), py::arg("gallery_cameras"),
        py::arg("mode") = "single", py::arg("distance") = "cosine",
        py::arg("exclude_same_camera") = true);

  m.def("gradcheck_json", [](const std::map<std::string, std::string>& config) {
    return dumped(to_json(run_gradcheck(gradcheck_options(to_config(config)))));
  });
  m.def("synth_json", [](const std::map<std::string, std::string>& config) {
    return dumped(cmd_synth(to_config(config)));
  });
  m.def("train_json", [](const std::map<std::string, std::string>& config,
                         const std::string& stage) {
    const RunConfig rc = to_config(config);
    return dumped(to_json(cmd_train(rc, parse_train_stage(stage)),
                          rc.get_bool("report.include_timing")));
  });
  m.def("run_all_json", [](const std::map<std::string, std::string>& config) {
    return dumped(cmd_run_all(to_config(config)));
  });
  m.def("config_keys", &RunConfig::known_keys);
}
