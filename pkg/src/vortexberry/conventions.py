"""Sign and storage conventions used across the package.

Every geometric choice that the continuum theory leaves open is fixed here,
once, and everything else is derived from these.  All operator identities in
the test suite are sensitive to this sheet; bump CONVENTIONS_VERSION whenever
anything below changes.

Geometry
--------
* Flat square torus, side ``L``, area form  omega = dx ^ dy,  Lambda(dx^dy) = 1.
* Laplacian is the geometer's one:  Delta = d*d = -(d2/dx2 + d2/dy2)  (>= 0).
* Sites live at  (i*h, j*h),  h = L/n;  x-links join (i,j)->(i+1,j), y-links
  (i,j)->(i,j+1).  Plaquette (i,j) has corners (i,j),(i+1,j),(i+1,j+1),(i,j+1).

Gauge fields
------------
* A unitary connection is  nabla = d + iA  with A a real-valued 1-form
  (the paper's ``a`` in i*Omega^1 is a = iA).
* Link variables are genuine parallel transporters along +x/+y links:
      U_mu(x) = exp(-i * integral of A over the link),
  so the covariant forward difference reads
      (D_mu phi)(x) = [conj(U_mu(x)) phi(x+mu) - phi(x)] / h.
* Plaquette holonomy  P = U_x(i,j) U_y(i+1,j) conj(U_x(i,j+1)) conj(U_y(i,j)).
  With these orientations  arg(P)/h^2  discretizes  i*Lambda*F  and
      sum over plaquettes of arg(P) = 2*pi*degree  (exactly an integer).
* Gauge action: g(nabla, phi) = (g nabla g^-1, g phi); on links
  U -> g(end) U conj(g(start)); tangents (alpha, psi) -> (alpha, g psi).

Hermitian metric and (0,1) coordinates
--------------------------------------
* h(u, v) = conj(u) * v   (conjugate-linear in the FIRST slot).  This is the
  choice that makes the Berry connection reproduce the vertical generators
  with value +i*f.
* (0,1)-forms are stored in the "unitary coordinate"
      alpha_tilde = sqrt(2) * (dzbar-coefficient),
  so pointwise |alpha|^2 = |alpha_tilde|^2 and the real-1-form dictionary is
      alpha_tilde = i*(A_x + i*A_y),   A_x = Im(alpha_tilde), A_y = -Re(alpha_tilde).

Discrete operator stencils
--------------------------
* dbar on scalars (codomain side, B1 block):  B1 = -dx_b + i*dy_b  (backward),
  whose exact adjoint is  B1+ = dx_f + i*dy_f  (forward).
* dbar_nabla on sections (B2 block): forward covariant differences
  B2 = Dx_f + i*Dy_f; its exact adjoint uses backward differences with
  conjugate transport.  These pairings make  A A* = |phi|^2  and the flat
  Leibniz cancellation in  D A* + A D*  exact.
* Vertical generators:  X_f = L*(-i f, 0) = (forward-gradient part, i f phi),
  and the scalar operator  H = (Delta_5 + |phi|^2)/2  uses the standard 5-point
  Laplacian Delta_5 = (backward div) o (forward grad), so  A(X_f) = i f  holds
  to solver precision.
"""

CONVENTIONS_VERSION = "1"
