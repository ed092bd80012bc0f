#include <pybind11/pybind11.h>

namespace py = pybind11;

PYBIND11_MODULE(_qcert, m) {
    m.doc() = "quadratic constraint certification toolkit";
    m.attr("placeholder") = true;
}
