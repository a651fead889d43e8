#define PY_SSIZE_T_CLEAN
#include <Python.h>

#include "planmine/syntax.hpp"

#include <mutex>
#include <string>

namespace planmine {

namespace {

// The interpreter lives for the rest of the process. Finalizing it at exit
// races with other static destructors, so it is deliberately never torn down.
void ensure_interpreter() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (Py_IsInitialized() != 0) return;
    PyConfig config;
    PyConfig_InitIsolatedConfig(&config);
    config.install_signal_handlers = 0;
    config.site_import = 0;
    Py_InitializeFromConfig(&config);
    PyConfig_Clear(&config);
    PyEval_SaveThread();  // release the GIL taken by initialization
  });
}

}  // namespace

bool validate_syntax(std::string_view source) {
  // The C API wants a NUL-terminated buffer; embedded NULs are a syntax
  // error in Python source anyway.
  if (source.find('\0') != std::string_view::npos) return false;
  ensure_interpreter();
  const std::string buffer(source);

  const PyGILState_STATE gil = PyGILState_Ensure();
  PyCompilerFlags flags = _PyCompilerFlags_INIT;
  flags.cf_flags = PyCF_ONLY_AST;
  PyObject* tree = Py_CompileStringExFlags(buffer.c_str(), "<snippet>", Py_file_input, &flags, -1);
  const bool ok = tree != nullptr;
  Py_XDECREF(tree);
  if (!ok) PyErr_Clear();
  PyGILState_Release(gil);
  return ok;
}

}  // namespace planmine
