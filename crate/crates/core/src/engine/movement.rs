//! Daily movement: community admissions, ends of stay and transfers.

use rand::Rng;

use super::events::{EventKind, FullyTurnedAway, Target, TurnedAway};
use super::Model;
use crate::error::{Error, Result};
use crate::ids::{AgentId, BedType, Category, CountyId, FacilityId, Location};
use crate::network::AdmitOutcome;
use crate::population::Life;
use crate::transitions::TransitionSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    CommunityToStach,
    CommunityToNh,
    FacilityDischarge,
}

/// One move selected for the current day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub agent: AgentId,
    pub kind: ActionKind,
    pub day: u32,
}

impl Model {
    /// Scans community agents in ascending id order. Agents with no chance of
    /// leaving the community consume no draw.
    pub(super) fn select_community_moves(&mut self) -> Vec<Action> {
        let mut out = Vec::new();
        for (i, agent) in self.agents.iter().enumerate() {
            if agent.life != Life::Alive || agent.location != Location::Community {
                continue;
            }
            let (ph, pn) = self.community_rates[i];
            if ph <= 0.0 && pn <= 0.0 {
                continue;
            }
            let u: f64 = self.rng.random();
            let kind = if u < ph {
                ActionKind::CommunityToStach
            } else if u < ph + pn {
                ActionKind::CommunityToNh
            } else {
                continue;
            };
            out.push(Action {
                agent: agent.unique_id,
                kind,
                day: self.day,
            });
        }
        out
    }

    /// Agents whose stay ends today.
    pub(super) fn select_discharges(&mut self) -> Vec<Action> {
        let day = self.day;
        let Some(due) = self.calendar.remove(&day) else {
            return Vec::new();
        };
        due.into_iter()
            .filter(|id| {
                let a = &self.agents[id.index()];
                a.is_alive() && a.leave_day == Some(day) && matches!(a.location, Location::Facility(_))
            })
            .map(|agent| Action {
                agent,
                kind: ActionKind::FacilityDischarge,
                day,
            })
            .collect()
    }

    pub(super) fn execute(&mut self, action: Action) -> Result<()> {
        let a = &self.agents[action.agent.index()];
        if !a.is_alive() {
            return Err(Error::logic(format!("action for dead agent {}", action.agent)));
        }
        match action.kind {
            ActionKind::CommunityToStach => self.admit_from_community(action.agent, Category::Stach),
            ActionKind::CommunityToNh => self.admit_from_community(action.agent, Category::Nh),
            ActionKind::FacilityDischarge => self.end_of_stay(action.agent),
        }
    }

    /// LOS and bed type for a prospective stay at the facility at roster index `fidx`.
    fn draw_stay(&mut self, id: AgentId, fidx: usize) -> (u32, BedType) {
        let los = self.los[fidx].sample(&mut self.rng);
        let f = self.roster.at(fidx);
        let bed = if f.category == Category::Stach && f.beds(BedType::Icu) > 0 {
            let a = &self.agents[id.index()];
            let beds = f.input_beds_nonicu + f.input_beds_icu;
            self.icu
                .assign(a.age_group, a.concurrent_conditions, los, beds, &mut self.rng)
        } else {
            BedType::NonIcu
        };
        (los, bed)
    }

    /// Tries one facility. Returns whether the agent was admitted.
    fn try_admit(&mut self, id: AgentId, facility: FacilityId, origin: Location) -> Result<bool> {
        let fidx = self
            .roster
            .position(facility)
            .ok_or_else(|| Error::logic(format!("unknown facility {facility}")))?;
        let (los, bed) = self.draw_stay(id, fidx);
        let agent = &self.agents[id.index()];
        match self.roster.at_mut(fidx).admit_any(agent, bed)? {
            AdmitOutcome::Admitted(bed) => {
                self.place(id, fidx, bed, los, origin)?;
                Ok(true)
            }
            AdmitOutcome::Full => {
                let county = self.agents[id.index()].county;
                self.reject(id, facility, county, origin)?;
                Ok(false)
            }
        }
    }

    fn reject(&mut self, id: AgentId, facility: FacilityId, county: CountyId, origin: Location) -> Result<()> {
        self.turned_away.push(TurnedAway {
            day: self.day,
            facility_id: facility,
            county_id: county,
        });
        self.today.turned_away += 1;
        self.log(
            id,
            EventKind::TurnedAway,
            origin,
            Target::Location(Location::Facility(facility)),
            county.to_string(),
        )
    }

    fn give_up(&mut self, id: AgentId, category: Category, origin: Location) -> Result<()> {
        let county = self.agents[id.index()].county;
        self.fully_turned_away.push(FullyTurnedAway {
            day: self.day,
            agent_id: id,
            category,
            county_id: county,
        });
        self.today.fully_turned_away += 1;
        self.log(
            id,
            EventKind::FullyTurnedAway,
            origin,
            Target::Category(category),
            county.to_string(),
        )
    }

    /// First choice, then home-county facilities, then facilities in range,
    /// each tried at most once. Nursing homes stop after the attempt limit.
    fn admit_from_community(&mut self, id: AgentId, category: Category) -> Result<()> {
        let county = self.agents[id.index()].county;
        let first = self.choice.pick(category, county, self.rng.random());
        let mut candidates: Vec<FacilityId> = first.into_iter().collect();
        for list in [&self.home, &self.in_range] {
            if let Some(ids) = list.get(&(category, county)) {
                for f in ids {
                    if !candidates.contains(f) {
                        candidates.push(*f);
                    }
                }
            }
        }
        let limit = match category {
            Category::Nh => self.params.nursing_home_attempts as usize,
            Category::Ltach => self.params.ltach_attempts as usize,
            _ => usize::MAX,
        };
        for f in candidates.into_iter().take(limit) {
            if self.try_admit(id, f, Location::Community)? {
                self.moves[Category::Community.index()][category.index()] += 1;
                return Ok(());
            }
        }
        self.give_up(id, category, Location::Community)
    }

    fn end_of_stay(&mut self, id: AgentId) -> Result<()> {
        let Location::Facility(fid) = self.agents[id.index()].location else {
            return Err(Error::logic(format!("agent {id} is not in a facility")));
        };
        let from = self.category_of(Location::Facility(fid));
        let death = self.tables.deaths.get(from);
        if death > 0.0 && self.rng.random::<f64>() < death {
            self.release(id, fid)?;
            let a = &mut self.agents[id.index()];
            a.life = Life::Dead;
            a.previous_location = Some(Location::Facility(fid));
            self.deaths[from.index()] += 1;
            self.today.deaths += 1;
            return self.log(
                id,
                EventKind::Death,
                Location::Facility(fid),
                Target::None,
                String::new(),
            );
        }

        let age = self.agents[id.index()].age_group;
        let returning_home = match (from, self.agents[id.index()].previous_location) {
            (Category::Stach, Some(Location::Facility(prev)))
                if self.category_of(Location::Facility(prev)) == Category::Nh =>
            {
                let p = self.params.nh_stach_nh;
                (p > 0.0 && self.rng.random::<f64>() < p).then_some(prev)
            }
            _ => None,
        };
        let to = if returning_home.is_some() {
            Category::Nh
        } else {
            let source = match from {
                Category::Stach => TransitionSource::Hospital(fid),
                Category::Ltach => TransitionSource::LtachCollective,
                _ => TransitionSource::NhCollective,
            };
            let row = self
                .tables
                .facility
                .get(source, age)
                .ok_or_else(|| Error::logic(format!("no transition row for facility {fid}")))?;
            row.pick(self.rng.random())
        };

        self.release(id, fid)?;
        self.today.discharges += 1;
        self.log(
            id,
            EventKind::Discharge,
            Location::Facility(fid),
            Target::Category(to),
            String::new(),
        )?;
        if to == Category::Community {
            self.moves[from.index()][Category::Community.index()] += 1;
            return Ok(());
        }
        let origin = Location::Facility(fid);
        let county = self.agents[id.index()].county;
        let target = match returning_home {
            Some(nh) => Some(nh),
            None => self.choice.pick(to, county, self.rng.random()),
        };
        let admitted = match target {
            Some(f) => self.try_admit(id, f, origin)?,
            None => {
                self.give_up(id, to, origin)?;
                false
            }
        };
        let realized = if admitted { to } else { Category::Community };
        self.moves[from.index()][realized.index()] += 1;
        Ok(())
    }

    fn place(&mut self, id: AgentId, fidx: usize, bed: BedType, los: u32, origin: Location) -> Result<()> {
        let fid = self.roster.at(fidx).id;
        let leave = self.day + los;
        let a = &mut self.agents[id.index()];
        a.location = Location::Facility(fid);
        a.previous_location = Some(origin);
        a.leave_day = Some(leave);
        a.current_bed = Some(bed);
        self.calendar.entry(leave).or_default().push(id);
        self.los_tally[fidx].add(los);
        self.today.admissions += 1;
        self.log(
            id,
            EventKind::Admit,
            origin,
            Target::Location(Location::Facility(fid)),
            bed.label().to_string(),
        )
    }

    fn release(&mut self, id: AgentId, fid: FacilityId) -> Result<()> {
        self.roster
            .get_mut(fid)
            .ok_or_else(|| Error::logic(format!("unknown facility {fid}")))?
            .discharge(id)?;
        let a = &mut self.agents[id.index()];
        a.location = Location::Community;
        a.previous_location = Some(Location::Facility(fid));
        a.leave_day = None;
        a.current_bed = None;
        Ok(())
    }
}
