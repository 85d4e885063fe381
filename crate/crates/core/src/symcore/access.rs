//! Integer reads and writes at symbolic offsets, resolved within the owning
//! object as if-then-else chains over the cells an access could hit.

use crate::frontend::SubjectType;

use super::memory::{Cell, MemFault, MemoryState, ObjectId, PointerValue};
use super::value::SymValue;
use crate::semantics::BinOp;

pub type SymMemory = MemoryState<SymValue>;
pub type SymPointer = PointerValue<SymValue>;

fn int_of(cell: &Cell<SymValue>, ty: &SubjectType) -> Result<SymValue, MemFault> {
    let t = ty.int_ty().ok_or(MemFault::TypeMismatch)?;
    match cell {
        Cell::Int(v) => Ok(v.clone().cast(t)),
        Cell::Ptr(_) => Err(MemFault::TypeMismatch),
    }
}

/// Integer read of type `ty` at byte `offset`. The caller has already
/// constrained the offset to lie inside the object; positions without a
/// compatible cell are unreachable under that constraint.
pub fn load_symbolic(
    mem: &SymMemory,
    id: ObjectId,
    offset: &SymValue,
    ty: &SubjectType,
    size: u32,
) -> Result<SymValue, MemFault> {
    if let Some(o) = offset.as_const() {
        return int_of(mem.load(id, o, ty, size)?, ty);
    }
    let obj = mem.object(id);
    let cands: Vec<u32> = obj.candidates(ty).collect();
    let Some((&last, rest)) = cands.split_last() else {
        return Err(MemFault::TypeMismatch);
    };
    let mut acc = int_of(&obj.cells[&last].1, ty)?;
    for &o in rest.iter().rev() {
        let hit = SymValue::eq(offset.clone(), SymValue::offset(i64::from(o)));
        acc = SymValue::ite(hit, int_of(&obj.cells[&o].1, ty)?, acc);
    }
    Ok(acc)
}

/// Integer write at byte `offset`; every cell the offset may designate
/// becomes a choice between its old value and `value`.
pub fn store_symbolic(
    mem: &mut SymMemory,
    id: ObjectId,
    offset: &SymValue,
    ty: &SubjectType,
    size: u32,
    value: SymValue,
) -> Result<(), MemFault> {
    if let Some(o) = offset.as_const() {
        return mem.store(id, o, ty, size, Cell::Int(value));
    }
    let cands: Vec<u32> = mem.object(id).candidates(ty).collect();
    if cands.is_empty() {
        return Err(MemFault::TypeMismatch);
    }
    let obj = mem.object_mut(id);
    for o in cands {
        let (cell_ty, cell) = obj.cells.get_mut(&o).expect("candidate");
        let t = cell_ty.int_ty().ok_or(MemFault::TypeMismatch)?;
        let Cell::Int(old) = cell else { return Err(MemFault::TypeMismatch) };
        let hit = SymValue::cmp(BinOp::Eq, offset.clone(), SymValue::offset(i64::from(o)));
        *old = SymValue::ite(hit, value.clone().cast(t), old.clone());
    }
    Ok(())
}
