use super::SynthError;

pub type Mat3 = [[f64; 3]; 3];

/// World-to-camera rigid transform: `p_cam = rotation * p_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Mat3,
    translation: [f64; 3],
}

impl CameraPose {
    pub fn new(rotation: Mat3, translation: [f64; 3]) -> Result<Self, SynthError> {
        let rtr = matmul(&transpose(&rotation), &rotation);
        for (i, row) in rtr.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (v - want).abs() > 1e-9 {
                    return Err(SynthError::InvalidPose(format!("R^T R deviates from identity by {}", v - want)));
                }
            }
        }
        if det(&rotation) <= 0.0 {
            return Err(SynthError::InvalidPose("rotation has negative determinant".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: IDENTITY, translation: [0.0; 3] }
    }

    /// Camera with the given orientation (world-to-camera) centered at `center`.
    pub fn from_center(rotation: Mat3, center: [f64; 3]) -> Result<Self, SynthError> {
        let t = mat_vec(&rotation, center);
        Self::new(rotation, [-t[0], -t[1], -t[2]])
    }

    /// Camera on a sphere of `radius` around `target`, looking at it.
    ///
    /// `yaw` turns about the world y axis and `pitch` about the camera x axis;
    /// both zero puts the camera at `target - (0, 0, radius)` with identity rotation.
    pub fn orbit(target: [f64; 3], radius: f64, yaw: f64, pitch: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let cam_to_world = matmul(&ry, &rx);
        let forward = [cam_to_world[0][2], cam_to_world[1][2], cam_to_world[2][2]];
        let center = [
            target[0] - radius * forward[0],
            target[1] - radius * forward[1],
            target[2] - radius * forward[2],
        ];
        Self::from_center(transpose(&cam_to_world), center).expect("rotation products are orthonormal")
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation
    }

    pub fn center(&self) -> [f64; 3] {
        let c = mat_vec(&transpose(&self.rotation), self.translation);
        [-c[0], -c[1], -c[2]]
    }

    #[inline]
    pub fn world_to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        let r = mat_vec(&self.rotation, p);
        [r[0] + self.translation[0], r[1] + self.translation[1], r[2] + self.translation[2]]
    }

    /// Rotates a camera-frame direction into the world frame.
    #[inline]
    pub fn direction_to_world(&self, d: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2],
            r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2],
            r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2],
        ]
    }
}

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn transpose(m: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
