#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mattopo/mesh_io.h"

namespace mattopo::shapes {

/// Regular tetrahedron with unit edge length.
RawTetMesh single_tet();

/// Cube [0,size]^3 split into a central tet and four corner tets.
RawTetMesh cube_five_tets(double size = 1.0);

/// Box [0,size]^3 on an n^3 grid, each cell split into 6 tets along the
/// main diagonal (Kuhn subdivision, conforming across cells).
RawTetMesh box_grid(int nx, int ny, int nz, const Vec3& size);

/// Union of unit voxels (i,j,k) in [0,nx)x[0,ny)x[0,nz) for which
/// `occupied` returns true, Kuhn-subdivided.
RawTetMesh voxel_solid(int nx, int ny, int nz, const std::function<bool(int, int, int)>& occupied);

/// 2x2x1 block minus one 1x1x1 quadrant, each voxel refined n times.
RawTetMesh l_block(int n = 2);

/// U shape: 3x1x1 base with two 1x2x1 arms, each voxel refined n times.
RawTetMesh u_shape(int n = 2);

/// 5x3x1 slab with two 1x1 through holes (genus 2), refined n times.
RawTetMesh genus2_box(int n = 1);

/// Cube-to-ball mapping of an n^3 grid on [-1,1]^3, scaled to `radius`.
RawTetMesh ball(int n = 6, double radius = 1.0);

/// Solid torus: disk cross-section with `sectors` angular sectors and
/// `rings` radial rings, swept around `segments` stations.
RawTetMesh torus(double major_radius = 2.0, double minor_radius = 1.0, int segments = 16,
                 int sectors = 16, int rings = 2);

/// Solid cylinder along z.
RawTetMesh cylinder(double radius = 1.0, double height = 2.0, int sectors = 24, int rings = 2,
                    int layers = 4);

/// Thin box [0,sx]x[0,sy]x[0,sz] gridded nx x ny x nz.
RawTetMesh slab(double sx = 4.0, double sy = 4.0, double sz = 1.0, int nx = 8, int ny = 8, int nz = 2);

/// Fixture by name: tet, cube5, cube, lblock, ushape, genus2, ball, torus,
/// cylinder, slab. Throws for an unknown name.
RawTetMesh by_name(const std::string& name);
std::vector<std::string> names();

/// Euler characteristic of the solid fixture by construction.
int ground_truth_euler(const std::string& name);

}  // namespace mattopo::shapes
