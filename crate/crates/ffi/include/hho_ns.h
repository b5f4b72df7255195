#ifndef HHO_NS_H
#define HHO_NS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Convective discretization.
typedef enum HhoForm {
  HHO_FORM_HHO = 0,
  HHO_FORM_HDG = 1,
} HhoForm;

// Result codes. Zero is success.
typedef enum HhoStatus {
  HHO_STATUS_OK = 0,
  HHO_STATUS_NULL_POINTER = 1,
  HHO_STATUS_INVALID_ARGUMENT = 2,
  HHO_STATUS_INVALID_MESH = 3,
  HHO_STATUS_PARSE = 4,
  HHO_STATUS_IO = 5,
  HHO_STATUS_UNSUPPORTED = 6,
  HHO_STATUS_SINGULAR = 7,
  HHO_STATUS_LINEAR_SOLVER = 8,
  HHO_STATUS_DIVERGED = 9,
  HHO_STATUS_BUFFER_TOO_SMALL = 10,
  HHO_STATUS_PANIC = 11,
} HhoStatus;

// Which problem [`hho_solve`] solves.
typedef enum HhoProblem {
  HHO_PROBLEM_STOKES = 0,
  HHO_PROBLEM_NAVIER_STOKES = 1,
} HhoProblem;

// Which coefficient block [`hho_solution_copy`] reads.
typedef enum HhoBlock {
  // `2 dim P^k` velocity coefficients per element, x block then y block.
  HHO_BLOCK_ELEMENT_VELOCITY = 0,
  // `2 (k + 1)` velocity coefficients per face.
  HHO_BLOCK_FACE_VELOCITY = 1,
  // `dim P^k` pressure coefficients per element.
  HHO_BLOCK_PRESSURE = 2,
  // Residual history, one entry per linear solve.
  HHO_BLOCK_RESIDUAL_HISTORY = 3,
} HhoBlock;

// Opaque polygonal mesh.
typedef struct HhoMesh HhoMesh;

// Opaque discrete solution.
typedef struct HhoSolution HhoSolution;

// Discretization and solver parameters. Start from
// [`hho_options_default`] and override fields.
typedef struct HhoOptions {
  uint32_t degree;
  double nu;
  double tol;
  uint32_t max_iter;
  enum HhoForm form;
  // Penalty of the HDG form; ignored for `HHO_FORM_HHO`.
  double eta;
  double damping;
  uint32_t max_halvings;
} HhoOptions;

// Vector field callback: writes the value at `(x, y)` into `out[0..2]`.
// It may be called concurrently from several threads.
typedef void (*HhoVectorFn)(double x, double y, double *out, void *user);

// Summary of a solve.
typedef struct HhoReport {
  uint32_t iterations;
  bool converged;
  uint32_t halvings;
  double final_residual;
  double velocity_norm;
  double pressure_norm;
  double viscous_energy;
  double forcing_work;
  double energy_defect;
  double mass_residual;
  double multiplier;
} HhoReport;

// Discrete errors against an exact solution.
typedef struct HhoErrors {
  double meshsize;
  // Discrete energy norm of `u_h - I_h u`.
  double err_u;
  // L2 norm of the element part of `u_h - I_h u`.
  double err_l2_u;
  // L2 norm of the zero-mean pressure error against its projection.
  double err_p;
} HhoErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default options: k = 1, nu = 1, tol = 1e-10, 25 iterations, HHO form.
struct HhoOptions hho_options_default(void);

// Copies the calling thread's last error message, NUL-terminated and
// truncated to `len` bytes, into `buf`. Returns the full message length
// excluding the terminator, so a call with `len = 0` sizes the buffer.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t hho_last_error_message(char *buf, size_t len);

// Uniform `nx x ny` quadrilateral mesh of `[x0, x1] x [y0, y1]`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum HhoStatus hho_mesh_cartesian(uint32_t nx,
                                  uint32_t ny,
                                  double x0,
                                  double x1,
                                  double y0,
                                  double y1,
                                  struct HhoMesh **out);

// Uniform mesh of `2 nx ny` triangles of `[x0, x1] x [y0, y1]`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum HhoStatus hho_mesh_triangular(uint32_t nx,
                                   uint32_t ny,
                                   double x0,
                                   double x1,
                                   double y0,
                                   double y1,
                                   struct HhoMesh **out);

// Reads a mesh in the polymesh text format.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid handle slot.
enum HhoStatus hho_mesh_read(const char *path, struct HhoMesh **out);

// Releases a mesh. Solutions computed on it stay valid. Null is ignored.
//
// # Safety
// `mesh` must be null or a handle not yet freed.
void hho_mesh_free(struct HhoMesh *mesh);

// Writes element, face and boundary-face counts and the mesh size.
// Any output pointer may be null.
//
// # Safety
// `mesh` must be a live handle; non-null outputs must be writable.
enum HhoStatus hho_mesh_info(const struct HhoMesh *mesh,
                             size_t *num_elements,
                             size_t *num_faces,
                             size_t *num_boundary_faces,
                             double *meshsize);

// Solves Stokes or Navier-Stokes with forcing `f` and Dirichlet data `g`.
// A null `g` means homogeneous boundary conditions. When Newton fails to
// converge `HHO_STATUS_DIVERGED` is returned and no solution is stored.
//
// # Safety
// `mesh` and `options` must be valid; callbacks must be thread-safe for
// the given user pointers; `out` must be a valid handle slot.
enum HhoStatus hho_solve(const struct HhoMesh *mesh,
                         const struct HhoOptions *options,
                         enum HhoProblem problem,
                         HhoVectorFn f,
                         void *f_user,
                         HhoVectorFn g,
                         void *g_user,
                         struct HhoSolution **out);

// Releases a solution. Null is ignored.
//
// # Safety
// `solution` must be null or a handle not yet freed.
void hho_solution_free(struct HhoSolution *solution);

// Fills `report` with the solve summary.
//
// # Safety
// Both pointers must be valid.
enum HhoStatus hho_solution_report(const struct HhoSolution *solution, struct HhoReport *report);

// Copies a coefficient block into `buf` and writes its length to `len`.
// With a null `buf` only the length is written. Coefficients refer to the
// local orthonormal bases of the solver.
//
// # Safety
// `solution` and `len` must be valid; `buf` must be null or hold `capacity`
// writable doubles.
enum HhoStatus hho_solution_copy(const struct HhoSolution *solution,
                                 enum HhoBlock block,
                                 double *buf,
                                 size_t capacity,
                                 size_t *len);

// Errors of a solution against the Kovasznay flow with viscosity `nu`.
// The solution should come from the Kovasznay data on `[-0.5, 1.5] x [0, 2]`.
//
// # Safety
// `solution` and `errors` must be valid.
enum HhoStatus hho_kovasznay_errors(const struct HhoSolution *solution,
                                    double nu,
                                    struct HhoErrors *errors);

// Kovasznay velocity, usable as the Dirichlet callback of [`hho_solve`]
// (the Kovasznay forcing is zero). `user` points to the viscosity.
//
// # Safety
// `out` must hold two doubles; `user` must point to a double.
void hho_kovasznay_velocity(double x, double y, double *out, void *user);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HHO_NS_H */
