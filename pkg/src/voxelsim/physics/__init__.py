from .world import (
    Body,
    Rope,
    Settings,
    SpringDamper,
    Terrain,
    WeldJoint,
    World,
    apply_force,
    contact_query,
    set_rest_length,
    spring_coefficients,
    spring_force,
    step,
)

__all__ = [
    "Body",
    "Rope",
    "Settings",
    "SpringDamper",
    "Terrain",
    "WeldJoint",
    "World",
    "apply_force",
    "contact_query",
    "set_rest_length",
    "spring_coefficients",
    "spring_force",
    "step",
]
