//! Record layout: natural alignment, fields in declaration order, no
//! reordering. Scalars are aligned to their size; pointers are 4 bytes.

use super::ast::{Program, RecordLayout, SubjectType};

pub const POINTER_SIZE: u32 = 4;

/// Size and alignment in bytes. Record layouts must already be present.
pub fn size_align(program: &Program, ty: &SubjectType) -> (u32, u32) {
    size_align_with(ty, &|rec| {
        let l = program.layout_of(rec);
        (l.total_size, l.alignment)
    })
}

pub(crate) fn size_align_with(ty: &SubjectType, rec: &dyn Fn(usize) -> (u32, u32)) -> (u32, u32) {
    match ty {
        SubjectType::Int(t) => (t.size_bytes(), t.size_bytes()),
        SubjectType::Bool => (1, 1),
        SubjectType::Enum(_) => (4, 4),
        SubjectType::Pointer(_) | SubjectType::VoidPointer => (POINTER_SIZE, POINTER_SIZE),
        SubjectType::Array(elem, n) => {
            let (s, a) = size_align_with(elem, rec);
            (s * n, a)
        }
        SubjectType::Record(id) => rec(*id),
        SubjectType::Void => (1, 1),
    }
}

fn align_up(v: u32, a: u32) -> u32 {
    v.div_ceil(a) * a
}

/// Lay out fields given each field's (size, alignment).
pub(crate) fn lay_out(fields: &[(String, (u32, u32))]) -> RecordLayout {
    let mut offset = 0;
    let mut alignment = 1;
    let mut field_offsets = Vec::with_capacity(fields.len());
    for (name, (size, align)) in fields {
        offset = align_up(offset, *align);
        field_offsets.push((name.clone(), offset));
        offset += size;
        alignment = alignment.max(*align);
    }
    RecordLayout { field_offsets, total_size: align_up(offset.max(1), alignment), alignment }
}

/// Recompute every record layout. Records must be acyclic by value, which
/// `parse` guarantees.
pub fn layout(mut program: Program) -> Program {
    let n = program.records.len();
    let mut done: Vec<Option<RecordLayout>> = vec![None; n];
    fn compute(p: &Program, id: usize, done: &mut Vec<Option<RecordLayout>>) -> (u32, u32) {
        if let Some(l) = &done[id] {
            return (l.total_size, l.alignment);
        }
        let mut fields = Vec::new();
        for f in &p.records[id].fields {
            let mut deps = Vec::new();
            collect_records(&f.ty, &mut deps);
            for d in deps {
                compute(p, d, done);
            }
            let sa = size_align_with(&f.ty, &|r| {
                let l = done[r].as_ref().expect("dependency computed above");
                (l.total_size, l.alignment)
            });
            fields.push((f.name.clone(), sa));
        }
        let l = lay_out(&fields);
        let r = (l.total_size, l.alignment);
        done[id] = Some(l);
        r
    }
    for id in 0..n {
        compute(&program, id, &mut done);
    }
    for (rec, l) in program.records.iter_mut().zip(done) {
        rec.layout = l;
    }
    program
}

/// Records contained by value (through arrays, not through pointers).
pub(crate) fn collect_records(ty: &SubjectType, out: &mut Vec<usize>) {
    match ty {
        SubjectType::Record(id) => out.push(*id),
        SubjectType::Array(e, _) => collect_records(e, out),
        _ => {}
    }
}
