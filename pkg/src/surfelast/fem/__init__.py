"""Finite-element discretization: elements, meshes and assembly."""
from .assembly import AssembledSystem, LoadCase, Model, ReducedSystem, apply_constraints, insert_free
from .mesh import Block, Mesh, generate_mesh, read_mesh, write_mesh

__all__ = ["AssembledSystem", "LoadCase", "Model", "ReducedSystem", "apply_constraints", "insert_free",
           "Block", "Mesh", "generate_mesh", "read_mesh", "write_mesh"]
